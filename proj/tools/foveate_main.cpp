#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>

#include "foveate/errors.hpp"
#include "foveate/harness.hpp"
#include "foveate/image_io.hpp"
#include "foveate/optimizer.hpp"
#include "foveate/oracle.hpp"
#include "foveate/samplers.hpp"
#include "foveate/synthetic.hpp"
#include "foveate/warp.hpp"

namespace {

using namespace foveate;

std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) {
                throw std::invalid_argument(cell);
            }
        } catch (const std::exception&) {
            throw InvalidArgument(std::string("bad number in ") + what + ": '" + cell + "'");
        }
    }
    if (out.size() != expected) {
        throw InvalidArgument(std::string(what) + " needs " + std::to_string(expected) + " comma-separated numbers");
    }
    return out;
}

MobiusParams parse_theta(const std::string& text) {
    const auto v = parse_list(text, 4, "--theta");
    return {v[0], v[1], v[2], v[3]};
}

void log_line(const std::string& msg) { std::cerr << "foveate: " << msg << '\n'; }

// Knobs shared by adapt and sweep.
struct LoopOptions {
    std::uint64_t seed = 0;
    int iters = AdaptConfig{}.iterations;
    double spsa_delta = AdaptConfig{}.spsa_delta;
    double lr = AdaptConfig{}.learning_rate;
    double eta = AdaptConfig{}.eta;
    double beta_grad = AdaptConfig{}.beta_grad;
    double fd_step = AdaptConfig{}.fd_step;
    int questions = AdaptConfig{}.questions_per_spsa;
    std::string weights = "1,0,1";
    double fov = 90.0;
    std::string oracle_cmd;
    std::string mock;
    double tau = 0.25;
    std::string echo_answer = "A";

    void attach(CLI::App* app) {
        app->add_option("--seed", seed, "RNG seed");
        app->add_option("--iters", iters, "Adaptation iterations");
        app->add_option("--spsa-delta", spsa_delta, "SPSA perturbation size");
        app->add_option("--lr", lr, "Learning rate");
        app->add_option("--eta", eta, "Question-weight learning rate");
        app->add_option("--beta-grad", beta_grad, "Text-gradient balance");
        app->add_option("--fd-step", fd_step, "Finite-difference step of the perceptual gradient");
        app->add_option("--questions-per-spsa", questions, "Questions sampled per feedback iteration");
        app->add_option("--weights", weights, "Perceptual loss weights alpha,beta,gamma");
        app->add_option("--fov", fov, "Horizontal field of view in degrees");
        app->add_option("--oracle-cmd", oracle_cmd, "Oracle process speaking the line protocol on stdio");
        app->add_option("--mock", mock, "In-process mock oracle")->check(CLI::IsMember({"region-fidelity", "echo"}));
        app->add_option("--tau", tau, "Region-fidelity threshold (mean absolute error)");
        app->add_option("--answer", echo_answer, "Answer returned by the echo mock");
    }

    AdaptConfig adapt_config() const {
        AdaptConfig c;
        c.rng_seed = seed;
        c.iterations = iters;
        c.spsa_delta = spsa_delta;
        c.learning_rate = lr;
        c.eta = eta;
        c.beta_grad = beta_grad;
        c.fd_step = fd_step;
        c.questions_per_spsa = questions;
        const auto w = parse_list(weights, 3, "--weights");
        c.weights = {w[0], w[1], w[2]};
        return c;
    }

    OracleFactory factory() const {
        if (mock == "region-fidelity") {
            const double t = tau;
            return [t](const DatasetItem& item, const ImageBuffer& img) -> std::unique_ptr<Oracle> {
                if (!item.region) {
                    throw InvalidArgument("item " + item.id + " has no region for the region-fidelity mock");
                }
                return std::make_unique<RegionFidelityOracle>(
                    RegionFidelityConfig{img, region_to_pixels(*item.region, img.width(), img.height()), t});
            };
        }
        if (mock == "echo") {
            const std::string a = echo_answer;
            return [a](const DatasetItem&, const ImageBuffer&) -> std::unique_ptr<Oracle> {
                return std::make_unique<AnswerEchoOracle>(a);
            };
        }
        const std::optional<std::string> cmd = oracle_cmd.empty() ? std::nullopt : std::optional(oracle_cmd);
        return [cmd](const DatasetItem&, const ImageBuffer&) -> std::unique_ptr<Oracle> {
            auto o = oracle_from_environment(cmd);
            if (!o) {
                throw OracleUnavailable("no oracle: pass --oracle-cmd, --mock or set FOVEATE_ORACLE_URL");
            }
            return o;
        };
    }
};

int run_warp(const std::string& in, const std::string& out, const std::string& theta, bool inverse, double fov) {
    const ImageBuffer img = read_image(in);
    const SphereGeom geom = geometry_for(img, fov);
    const MobiusParams p = parse_theta(theta);
    const WarpResult r = inverse ? inverse_warp(img, p, geom) : forward_warp(img, p, geom);
    write_image(out, r.image);
    std::printf("coverage %.6f\n", r.mask.interior_fraction());
    return 0;
}

int run_sample(const std::string& in, const std::string& out, const std::string& strategy, double budget,
               const std::string& fixation, const std::string& theta, double fov) {
    const ImageBuffer img = read_image(in);
    SamplingSpec spec;
    spec.strategy = parse_strategy(strategy);
    spec.budget = PixelBudget(budget);
    if (!fixation.empty()) {
        const auto f = parse_list(fixation, 2, "--fixation");
        spec.fixation = {f[0], f[1]};
    }
    if (!theta.empty()) {
        spec.theta = parse_theta(theta);
    }
    const SphereGeom geom = geometry_for(img, fov);
    write_image(out, apply_sampling(img, spec, geom));
    std::printf("samples %zu of %zu pixels\n", sample_layout(spec, img.width(), img.height(), geom).count(),
                img.pixel_count());
    return 0;
}

int run_adapt(const LoopOptions& opt, const std::string& dataset, const std::string& item_id, double budget,
              double region_zoom, const std::string& out, const std::string& dump) {
    const auto items = load_dataset(dataset);
    if (items.empty()) {
        throw InvalidArgument("dataset is empty");
    }
    const DatasetItem* item = &items.front();
    if (!item_id.empty()) {
        item = nullptr;
        for (const auto& it : items) {
            if (it.id == item_id) {
                item = &it;
            }
        }
        if (item == nullptr) {
            throw InvalidArgument("no item with id " + item_id);
        }
    }
    const ImageBuffer img = read_image(item->image_path);
    const SphereGeom geom = geometry_for(img, opt.fov);
    AdaptConfig cfg = opt.adapt_config();
    cfg.budget = PixelBudget(budget);
    if (item->region) {
        cfg.initial_theta = region_initial_theta(*item->region, geom, region_zoom);
    }
    auto oracle = opt.factory()(*item, img);

    auto last = std::chrono::steady_clock::now();
    const AdaptResult r = adapt(img, item->questions, oracle.get(), cfg, geom, [&](const TraceEntry& e) {
        const auto now = std::chrono::steady_clock::now();
        char buf[160];
        std::snprintf(buf, sizeof buf, "iter %d  L_img %.5f  L_text %s  |g| %.4g  %.3f s%s", e.iteration, e.l_img,
                      e.l_text ? std::to_string(*e.l_text).c_str() : "-", e.grad_norm,
                      std::chrono::duration<double>(now - last).count(), e.spsa() ? "  (feedback)" : "");
        log_line(buf);
        last = now;
    });

    std::ofstream csv;
    std::ostream* os = &std::cout;
    if (!out.empty()) {
        csv.open(out, std::ios::binary);
        if (!csv) {
            throw IoError("cannot write " + out);
        }
        os = &csv;
    }
    *os << "iteration,l_img,l_text,grad_norm,a,b,c,d\n";
    for (const auto& e : r.loss_trace) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%d,%.9g,%s,%.9g,%.9g,%.9g,%.9g,%.9g\n", e.iteration, e.l_img,
                      e.l_text ? std::to_string(*e.l_text).c_str() : "", e.grad_norm, e.theta.a, e.theta.b,
                      e.theta.c, e.theta.d);
        *os << buf;
    }
    char summary[256];
    std::snprintf(summary, sizeof summary, "best iteration %d, loss %.6f, theta* (%.6f, %.6f, %.6f, %.6f), %lld oracle calls",
                  r.best_iteration, r.best_loss, r.theta_star.a, r.theta_star.b, r.theta_star.c, r.theta_star.d,
                  r.oracle_calls);
    log_line(summary);
    if (!dump.empty()) {
        std::filesystem::create_directories(dump);
        write_image(std::filesystem::path(dump) / (item->id + "_bass.png"), r.sampled_image);
    }
    return 0;
}

int run_sweep(const LoopOptions& opt, const std::string& dataset, const std::vector<std::string>& strategies,
              const std::vector<double>& budgets, double region_zoom, int jobs, const std::string& out,
              const std::string& dump) {
    ExperimentConfig cfg;
    cfg.strategies.clear();
    for (const auto& s : strategies) {
        cfg.strategies.push_back(parse_strategy(s));
    }
    if (cfg.strategies.empty()) {
        cfg.strategies = {Strategy::uniform, Strategy::bass};
    }
    cfg.budgets = budgets.empty() ? std::vector<double>{0.05} : budgets;
    cfg.adapt = opt.adapt_config();
    cfg.fov_deg = opt.fov;
    cfg.region_zoom = region_zoom;
    cfg.jobs = jobs;
    if (!dump.empty()) {
        cfg.dump_dir = dump;
    }
    const auto report = run_experiment(load_dataset(dataset), cfg, opt.factory(), log_line);
    if (out.empty()) {
        write_report_csv(std::cout, report);
    } else {
        std::ofstream f(out, std::ios::binary);
        if (!f) {
            throw IoError("cannot write " + out);
        }
        write_report_csv(f, report);
    }
    return 0;
}

int run_report(const std::string& in, const std::string& out) {
    std::ifstream f(in, std::ios::binary);
    if (!f) {
        throw IoError("cannot read " + in);
    }
    ExperimentReport report;
    for (auto& r : read_report_csv(f)) {
        if (r.item_id != kSummaryId) {
            report.item_rows.push_back(std::move(r));
        }
    }
    report.summary_rows = summarize(report.item_rows);
    if (out.empty()) {
        write_report_csv(std::cout, report);
        return 0;
    }
    std::ofstream o(out, std::ios::binary);
    if (!o) {
        throw IoError("cannot write " + out);
    }
    write_report_csv(o, report);
    return 0;
}

int run_mock_oracle(const std::string& kind, const std::string& reference, const std::string& rect, double tau,
                    const std::string& answer, const std::string& http) {
    std::unique_ptr<Oracle> oracle;
    if (kind == "echo") {
        oracle = std::make_unique<AnswerEchoOracle>(answer);
    } else {
        if (reference.empty() || rect.empty()) {
            throw InvalidArgument("region-fidelity mock needs --reference and --rect");
        }
        const auto r = parse_list(rect, 4, "--rect");
        oracle = std::make_unique<RegionFidelityOracle>(RegionFidelityConfig{
            read_image(reference),
            {static_cast<int>(r[0]), static_cast<int>(r[1]), static_cast<int>(r[2]), static_cast<int>(r[3])},
            tau});
    }
    if (http.empty()) {
        std::string line;
        while (std::getline(std::cin, line)) {
            std::cout << serve_line(*oracle, line) << '\n' << std::flush;
        }
        return 0;
    }
    const auto colon = http.rfind(':');
    if (colon == std::string::npos) {
        throw InvalidArgument("--http expects host:port");
    }
    httplib::Server server;
    server.Post("/", [&](const httplib::Request& req, httplib::Response& res) {
        res.set_content(serve_line(*oracle, req.body), "application/json");
    });
    const int port = std::stoi(http.substr(colon + 1));
    log_line("serving on " + http);
    if (!server.listen(http.substr(0, colon), port)) {
        throw OracleUnavailable("cannot listen on " + http);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Foveated sampling with Möbius warps and black-box feedback"};
    app.require_subcommand(1);

    std::string in;
    std::string out;
    std::string theta;
    double fov = 90.0;
    bool inverse = false;
    auto* warp = app.add_subcommand("warp", "Apply the forward (or inverse) Möbius warp to an image");
    warp->add_option("--input,-i", in, "Input image")->required();
    warp->add_option("--output,-o", out, "Output image")->required();
    warp->add_option("--theta", theta, "a,b,c,d")->required();
    warp->add_flag("--inverse", inverse, "Apply the inverse warp");
    warp->add_option("--fov", fov, "Horizontal field of view in degrees");

    std::string strategy = "uniform";
    double budget = 0.05;
    std::string fixation;
    auto* sample = app.add_subcommand("sample", "Sample one image with one strategy");
    sample->add_option("--input,-i", in, "Input image")->required();
    sample->add_option("--output,-o", out, "Output image")->required();
    sample->add_option("--strategy", strategy, "uniform|bass|static_foveated|sunflower|radial");
    sample->add_option("--budget", budget, "Pixel budget fraction");
    sample->add_option("--fixation", fixation, "x,y in [0,1]");
    sample->add_option("--theta", theta, "a,b,c,d (bass)");
    sample->add_option("--fov", fov, "Horizontal field of view in degrees");

    LoopOptions loop;
    std::string dataset;
    std::string item_id;
    std::string dump;
    double region_zoom = ExperimentConfig{}.region_zoom;
    auto* adapt_cmd = app.add_subcommand("adapt", "Run the feedback loop on one dataset item");
    adapt_cmd->add_option("--dataset", dataset, "JSON Lines dataset")->required();
    adapt_cmd->add_option("--item", item_id, "Item id (default: first)");
    adapt_cmd->add_option("--budget", budget, "Pixel budget fraction");
    adapt_cmd->add_option("--region-zoom", region_zoom, "Initial zoom for region-guided items");
    adapt_cmd->add_option("--out", out, "Trace CSV (default stdout)");
    adapt_cmd->add_option("--dump-images", dump, "Directory for the sampled image");
    loop.attach(adapt_cmd);

    LoopOptions sweep_loop;
    std::vector<std::string> strategies;
    std::vector<double> budgets;
    int jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "Evaluate strategies x budgets over a dataset");
    sweep->add_option("--dataset", dataset, "JSON Lines dataset")->required();
    sweep->add_option("--strategy", strategies, "Strategy (repeatable)");
    sweep->add_option("--budget", budgets, "Budget (repeatable)");
    sweep->add_option("--region-zoom", region_zoom, "Initial zoom for region-guided items");
    sweep->add_option("--jobs", jobs, "Worker threads");
    sweep->add_option("--out", out, "Report CSV (default stdout)");
    sweep->add_option("--dump-images", dump, "Directory for sampled images");
    sweep_loop.attach(sweep);

    auto* report = app.add_subcommand("report", "Recompute summary rows from a report CSV");
    report->add_option("--in", in, "Report CSV")->required();
    report->add_option("--out", out, "Output CSV (default stdout)");

    int count = 10;
    std::uint64_t seed = 0;
    DetailTaskConfig task;
    auto* synth = app.add_subcommand("synth", "Write a synthetic region-guided dataset");
    synth->add_option("--out-dir", out, "Directory")->required();
    synth->add_option("--count", count, "Number of images");
    synth->add_option("--seed", seed, "RNG seed");
    synth->add_option("--width", task.width, "Image width");
    synth->add_option("--height", task.height, "Image height");
    synth->add_option("--patch", task.patch_size, "Detail patch side");

    std::string mock_kind = "region-fidelity";
    std::string reference;
    std::string rect;
    double tau = 0.25;
    std::string answer = "A";
    std::string http;
    auto* mock = app.add_subcommand("mock-oracle", "Serve a mock oracle on stdio or HTTP");
    mock->add_option("--mock", mock_kind, "region-fidelity|echo")->check(CLI::IsMember({"region-fidelity", "echo"}));
    mock->add_option("--reference", reference, "Full-resolution reference image");
    mock->add_option("--rect", rect, "x0,y0,x1,y1 in pixels");
    mock->add_option("--tau", tau, "Fidelity threshold");
    mock->add_option("--answer", answer, "Echo answer");
    mock->add_option("--http", http, "host:port to serve HTTP instead of stdio");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*warp) {
            return run_warp(in, out, theta, inverse, fov);
        }
        if (*sample) {
            return run_sample(in, out, strategy, budget, fixation, theta, fov);
        }
        if (*adapt_cmd) {
            return run_adapt(loop, dataset, item_id, budget, region_zoom, out, dump);
        }
        if (*sweep) {
            return run_sweep(sweep_loop, dataset, strategies, budgets, region_zoom, jobs, out, dump);
        }
        if (*report) {
            return run_report(in, out);
        }
        if (*synth) {
            std::printf("%s\n", write_detail_dataset(out, count, task, seed).string().c_str());
            return 0;
        }
        if (*mock) {
            return run_mock_oracle(mock_kind, reference, rect, tau, answer, http);
        }
    } catch (const std::exception& e) {
        log_line(std::string("error: ") + e.what());
        return 1;
    }
    return 0;
}
