#include "foveate/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "foveate/errors.hpp"
#include "foveate/image_io.hpp"
#include "foveate/warp.hpp"

namespace foveate {

namespace {

using nlohmann::json;

std::uint64_t hash_id(const std::string& id) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : id) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_number(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::string budget_label(double b) { return format_number(b, "%.6g"); }

QuestionItem parse_question(const json& q, const std::string& item_id, std::size_t index) {
    if (!q.is_object() || !q.contains("q") || !q.contains("a") || !q["q"].is_string() || !q["a"].is_string()) {
        throw InvalidArgument("question needs string fields \"q\" and \"a\"");
    }
    QuestionItem out;
    out.id = item_id + "#" + std::to_string(index);
    out.question = q["q"].get<std::string>();
    out.gt_answer = q["a"].get<std::string>();
    if (q.contains("choices")) {
        if (!q["choices"].is_array()) {
            throw InvalidArgument("\"choices\" must be a list of strings");
        }
        for (const auto& c : q["choices"]) {
            if (!c.is_string()) {
                throw InvalidArgument("\"choices\" must be a list of strings");
            }
            out.choices.push_back(c.get<std::string>());
        }
    }
    return out;
}

}  // namespace

std::vector<DatasetItem> parse_dataset(std::istream& in, const std::filesystem::path& base_dir) {
    std::vector<DatasetItem> items;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const json row = json::parse(line);
            if (!row.is_object() || !row.contains("image") || !row["image"].is_string()) {
                throw InvalidArgument("missing string field \"image\"");
            }
            DatasetItem item;
            item.id = row.contains("id") && row["id"].is_string() ? row["id"].get<std::string>()
                                                                  : "item-" + std::to_string(line_no);
            std::filesystem::path p = row["image"].get<std::string>();
            item.image_path = p.is_absolute() ? p : base_dir / p;
            if (!row.contains("questions") || !row["questions"].is_array() || row["questions"].empty()) {
                throw InvalidArgument("\"questions\" must be a non-empty list");
            }
            for (const auto& q : row["questions"]) {
                item.questions.push_back(parse_question(q, item.id, item.questions.size()));
            }
            if (row.contains("region")) {
                const auto& r = row["region"];
                if (!r.is_array() || r.size() != 4) {
                    throw InvalidArgument("\"region\" must be [x0, y0, x1, y1]");
                }
                Region reg{};
                for (std::size_t i = 0; i < 4; ++i) {
                    if (!r[i].is_number()) {
                        throw InvalidArgument("\"region\" entries must be numbers");
                    }
                    reg[i] = r[i].get<double>();
                }
                if (!(reg[0] >= 0.0 && reg[1] >= 0.0 && reg[2] <= 1.0 && reg[3] <= 1.0 && reg[0] < reg[2] &&
                      reg[1] < reg[3])) {
                    throw InvalidArgument("\"region\" must be a non-empty box inside [0, 1]^2");
                }
                item.region = reg;
            }
            items.push_back(std::move(item));
        } catch (const json::exception& e) {
            throw InvalidArgument("dataset line " + std::to_string(line_no) + ": " + e.what());
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return items;
}

std::vector<DatasetItem> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open dataset " + path.string());
    }
    return parse_dataset(in, path.parent_path());
}

PixelRect region_to_pixels(const Region& r, int width, int height) {
    PixelRect out;
    out.x0 = std::clamp(static_cast<int>(std::floor(r[0] * width + 1e-9)), 0, width - 1);
    out.y0 = std::clamp(static_cast<int>(std::floor(r[1] * height + 1e-9)), 0, height - 1);
    out.x1 = std::clamp(static_cast<int>(std::ceil(r[2] * width - 1e-9)), out.x0 + 1, width);
    out.y1 = std::clamp(static_cast<int>(std::ceil(r[3] * height - 1e-9)), out.y0 + 1, height);
    return out;
}

Fixation region_center(const Region& r) noexcept { return {(r[0] + r[2]) / 2.0, (r[1] + r[3]) / 2.0}; }

MobiusParams region_initial_theta(const Region& region, const SphereGeom& geom, double zoom) {
    const Fixation c = region_center(region);
    if (!(zoom > 0.0)) {
        throw InvalidArgument("region zoom must be positive");
    }
    const ComplexPoint w = pixel_to_plane(c.x * geom.width, geom.height / 2.0, geom);
    // w -> zoom (w - c): the pull-back of the forward warp reads c at the image centre.
    return normalize({zoom, -zoom * w.re, 0.0, 1.0});
}

double accuracy_retained(double acc_sampled, double acc_full) {
    if (!(acc_full > 0.0)) {
        throw ZeroBaseline("full-resolution accuracy is zero");
    }
    return 100.0 * acc_sampled / acc_full;
}

double delta_gain(double acc_method, double acc_uniform) {
    if (!(acc_uniform > 0.0)) {
        throw ZeroBaseline("uniform-sampling accuracy is zero");
    }
    return 100.0 * (acc_method - acc_uniform) / acc_uniform;
}

void ExperimentConfig::validate() const {
    if (strategies.empty() || budgets.empty()) {
        throw InvalidArgument("need at least one strategy and one budget");
    }
    for (double b : budgets) {
        (void)PixelBudget(b);
    }
    if (jobs < 1) {
        throw InvalidArgument("jobs must be at least 1");
    }
    if (!(region_zoom > 0.0)) {
        throw InvalidArgument("region zoom must be positive");
    }
    adapt.validate();
}

namespace {

struct ItemOutcome {
    std::vector<ReportRow> rows;
    std::optional<std::string> error;
};

class ItemRunner {
public:
    ItemRunner(const ExperimentConfig& cfg, const std::vector<Strategy>& strategies, const OracleFactory& make_oracle)
        : cfg_(cfg), strategies_(strategies), make_oracle_(make_oracle) {}

    std::vector<ReportRow> run(const DatasetItem& item) const {
        const ImageBuffer img = read_image(item.image_path);
        std::unique_ptr<Oracle> oracle = make_oracle_(item, img);
        if (!oracle) {
            throw OracleUnavailable("no oracle for item " + item.id);
        }
        std::vector<QuestionItem> questions = item.questions;
        attach_embeddings(questions, *oracle);
        const SphereGeom geom = geometry_for(img, cfg_.fov_deg);
        const Fixation fix = item.region ? region_center(*item.region) : Fixation{};

        std::vector<ReportRow> rows;
        rows.push_back(score(item.id, kFullStrategy, 1.0, img, questions, *oracle));
        for (std::size_t bi = 0; bi < cfg_.budgets.size(); ++bi) {
            const PixelBudget budget(cfg_.budgets[bi]);
            for (Strategy s : strategies_) {
                ImageBuffer sampled;
                if (s == Strategy::bass) {
                    AdaptConfig ac = cfg_.adapt;
                    ac.budget = budget;
                    ac.rng_seed = derive_seed(derive_seed(cfg_.adapt.rng_seed, hash_id(item.id)), bi);
                    if (item.region && !ac.initial_theta) {
                        ac.initial_theta = region_initial_theta(*item.region, geom, cfg_.region_zoom);
                    }
                    sampled = adapt(img, questions, oracle.get(), ac, geom).sampled_image;
                } else {
                    SamplingSpec spec;
                    spec.strategy = s;
                    spec.budget = budget;
                    spec.fixation = fix;
                    sampled = apply_sampling(img, spec, geom, cfg_.sampler);
                }
                if (cfg_.dump_dir) {
                    const auto dir = *cfg_.dump_dir / item.id;
                    std::filesystem::create_directories(dir);
                    write_image(dir / (std::string(to_string(s)) + "_" + budget_label(cfg_.budgets[bi]) + ".png"),
                                sampled);
                }
                rows.push_back(score(item.id, std::string(to_string(s)), cfg_.budgets[bi], sampled, questions, *oracle));
            }
        }
        return rows;
    }

private:
    static void attach_embeddings(std::vector<QuestionItem>& questions, Oracle& oracle) {
        std::vector<std::string> texts;
        std::vector<std::size_t> slots;
        for (std::size_t i = 0; i < questions.size(); ++i) {
            if (questions[i].choices.empty() && !questions[i].gt_embedding) {
                texts.push_back(questions[i].gt_answer);
                slots.push_back(i);
            }
        }
        if (texts.empty()) {
            return;
        }
        auto vecs = oracle.embed(texts);
        if (vecs.size() != texts.size()) {
            throw OracleError("oracle returned the wrong number of embeddings");
        }
        for (std::size_t j = 0; j < slots.size(); ++j) {
            questions[slots[j]].gt_embedding = std::move(vecs[j]);
        }
    }

    ReportRow score(const std::string& id, const std::string& strategy, double budget, const ImageBuffer& img,
                    const std::vector<QuestionItem>& questions, Oracle& oracle) const {
        ReportRow row;
        row.item_id = id;
        row.strategy = strategy;
        row.budget = budget;
        for (const auto& q : questions) {
            const AskResult r = oracle.ask(img, q.question);
            ++row.n_questions;
            if (answer_matches(q, r.answer, r.embedding, cfg_.adapt.match_threshold)) {
                ++row.n_correct;
            }
        }
        return row;
    }

    const ExperimentConfig& cfg_;
    const std::vector<Strategy>& strategies_;
    const OracleFactory& make_oracle_;
};

}  // namespace

ExperimentReport run_experiment(const std::vector<DatasetItem>& dataset, const ExperimentConfig& cfg,
                                const OracleFactory& make_oracle, const LogSink& log) {
    cfg.validate();
    if (dataset.empty()) {
        throw InvalidArgument("dataset is empty");
    }
    std::vector<Strategy> strategies;
    if (std::find(cfg.strategies.begin(), cfg.strategies.end(), Strategy::uniform) == cfg.strategies.end()) {
        strategies.push_back(Strategy::uniform);
    }
    for (Strategy s : cfg.strategies) {
        if (std::find(strategies.begin(), strategies.end(), s) == strategies.end()) {
            strategies.push_back(s);
        }
    }

    const ItemRunner runner(cfg, strategies, make_oracle);
    std::vector<ItemOutcome> outcomes(dataset.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < dataset.size(); i = next.fetch_add(1)) {
            try {
                outcomes[i].rows = runner.run(dataset[i]);
            } catch (const std::exception& e) {
                outcomes[i].error = e.what();
                if (log) {
                    std::lock_guard lock(log_mutex);
                    log("item " + dataset[i].id + " failed: " + e.what());
                }
            }
        }
    };
    const int n_threads = std::min<int>(cfg.jobs, static_cast<int>(dataset.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back(worker);
        }
    }

    ExperimentReport report;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (outcomes[i].error) {
            report.failed_items.push_back(dataset[i].id);
            continue;
        }
        for (auto& r : outcomes[i].rows) {
            report.item_rows.push_back(std::move(r));
        }
    }
    const double failed = static_cast<double>(report.failed_items.size());
    if (failed > cfg.max_failure_fraction * static_cast<double>(dataset.size())) {
        throw Error(std::to_string(report.failed_items.size()) + " of " + std::to_string(dataset.size()) +
                    " items failed; aborting the experiment");
    }
    if (log && !report.failed_items.empty()) {
        log(std::to_string(report.failed_items.size()) + " item(s) excluded after failures");
    }
    report.summary_rows = summarize(report.item_rows);
    return report;
}

std::vector<ReportRow> summarize(const std::vector<ReportRow>& item_rows) {
    // Keyed by (strategy, budget label) so rows of the same cell aggregate whatever their order.
    std::map<std::pair<std::string, std::string>, ReportRow> cells;
    std::vector<std::pair<std::string, std::string>> order;
    for (const auto& r : item_rows) {
        if (r.item_id == kSummaryId) {
            continue;
        }
        const auto key = std::make_pair(r.strategy, budget_label(r.budget));
        auto [it, fresh] = cells.try_emplace(key);
        if (fresh) {
            it->second.item_id = kSummaryId;
            it->second.strategy = r.strategy;
            it->second.budget = r.budget;
            order.push_back(key);
        }
        it->second.n_questions += r.n_questions;
        it->second.n_correct += r.n_correct;
    }

    std::optional<double> full_acc;
    std::map<std::string, double> uniform_acc;
    for (const auto& [key, row] : cells) {
        if (row.strategy == kFullStrategy) {
            full_acc = row.accuracy();
        } else if (row.strategy == to_string(Strategy::uniform)) {
            uniform_acc[key.second] = row.accuracy();
        }
    }

    std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
        const bool xf = x.first == kFullStrategy;
        const bool yf = y.first == kFullStrategy;
        return xf && !yf;
    });
    std::vector<ReportRow> out;
    for (const auto& key : order) {
        ReportRow row = cells.at(key);
        if (row.strategy != kFullStrategy) {
            if (full_acc && *full_acc > 0.0) {
                row.retained = accuracy_retained(row.accuracy(), *full_acc);
            }
            const auto u = uniform_acc.find(key.second);
            if (u != uniform_acc.end() && u->second > 0.0) {
                row.gain = delta_gain(row.accuracy(), u->second);
            }
        } else if (full_acc && *full_acc > 0.0) {
            row.retained = 100.0;
        }
        out.push_back(std::move(row));
    }
    return out;
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
    out << "item_id,strategy,budget,n_questions,n_correct,accuracy,retained,gain\n";
    auto emit = [&](const ReportRow& r) {
        out << r.item_id << ',' << r.strategy << ',' << budget_label(r.budget) << ',' << r.n_questions << ','
            << r.n_correct << ',' << format_number(r.accuracy(), "%.4f") << ','
            << (r.retained ? format_number(*r.retained, "%.4f") : "") << ','
            << (r.gain ? format_number(*r.gain, "%.4f") : "") << '\n';
    };
    for (const auto& r : report.item_rows) {
        emit(r);
    }
    for (const auto& r : report.summary_rows) {
        emit(r);
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double parse_double(const std::string& s, int line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("report line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
}

}  // namespace

std::vector<ReportRow> read_report_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw InvalidArgument("report is empty");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "item_id,strategy,budget,n_questions,n_correct,accuracy,retained,gain") {
        throw InvalidArgument("unexpected report header: " + line);
    }
    std::vector<ReportRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != 8) {
            throw InvalidArgument("report line " + std::to_string(line_no) + ": expected 8 columns");
        }
        ReportRow r;
        r.item_id = cells[0];
        r.strategy = cells[1];
        r.budget = parse_double(cells[2], line_no);
        r.n_questions = static_cast<int>(parse_double(cells[3], line_no));
        r.n_correct = static_cast<int>(parse_double(cells[4], line_no));
        if (!cells[6].empty()) {
            r.retained = parse_double(cells[6], line_no);
        }
        if (!cells[7].empty()) {
            r.gain = parse_double(cells[7], line_no);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace foveate
