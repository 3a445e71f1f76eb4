// Acceptance runner: one PASS/FAIL line per headline criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "foveate/errors.hpp"
#include "foveate/geometry.hpp"
#include "foveate/harness.hpp"
#include "foveate/metrics.hpp"
#include "foveate/optimizer.hpp"
#include "foveate/oracle.hpp"
#include "foveate/samplers.hpp"
#include "foveate/synthetic.hpp"
#include "foveate/warp.hpp"
#include "test_support.hpp"

namespace foveate {
namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Check {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok && outcome_.pass) {
            outcome_.pass = false;
            outcome_.detail = what;
        }
    }
    void note(const std::string& text) { notes_.push_back(text); }
    Outcome finish() {
        if (outcome_.pass) {
            std::string joined;
            for (const auto& n : notes_) {
                joined += (joined.empty() ? "" : "; ") + n;
            }
            outcome_.detail = joined;
        }
        return outcome_;
    }

private:
    Outcome outcome_;
    std::vector<std::string> notes_;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

MobiusParams random_theta(Rng& rng) {
    return normalize({0.8 + 0.4 * rng.uniform(), -0.1 + 0.2 * rng.uniform(), -0.1 + 0.2 * rng.uniform(),
                      0.8 + 0.4 * rng.uniform()});
}

ComplexPoint random_point(Rng& rng) {
    return ComplexPoint::from({4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0});
}

double dist(const ComplexPoint& a, const ComplexPoint& b) { return std::abs(a.value() - b.value()); }

Outcome geometry_suite() {
    Check c;
    Rng rng(1);
    double worst_round = 0.0, worst_conf = 0.0, worst_stereo = 0.0;
    for (int i = 0; i < 200; ++i) {
        const MobiusParams p = random_theta(rng);
        const MobiusParams q = random_theta(rng);
        const ComplexPoint w = random_point(rng);
        worst_round = std::max(worst_round, dist(mobius_apply(MobiusParams::identity(), w), w));
        worst_round = std::max(worst_round, dist(mobius_inverse_apply(p, mobius_apply(p, w)), w));
        worst_round = std::max(worst_round, dist(mobius_apply(inverse(p), mobius_apply(p, w)), w));
        worst_round = std::max(worst_round, dist(mobius_apply(compose(p, q), w), mobius_apply(p, mobius_apply(q, w))));

        // Cauchy-Riemann: the difference quotient is the same along 1 and i.
        const double eps = 1e-6;
        const std::complex<double> f0 = mobius_apply(p, w).value();
        const std::complex<double> dx = (mobius_apply(p, ComplexPoint::from(w.value() + eps)).value() - f0) / eps;
        const std::complex<double> dy =
            (mobius_apply(p, ComplexPoint::from(w.value() + std::complex<double>(0, eps))).value() - f0) /
            std::complex<double>(0, eps);
        worst_conf = std::max(worst_conf, std::abs(dx - dy) / std::abs(dx));

        worst_stereo = std::max(worst_stereo, dist(stereo_project(stereo_unproject(w)), w));
    }
    c.expect(worst_round <= 1e-9, "Mobius round trip error " + fmt("%.3g", worst_round));
    c.expect(worst_conf <= 1e-3, "conformality error " + fmt("%.3g", worst_conf));
    c.expect(worst_stereo <= 1e-9, "stereographic round trip error " + fmt("%.3g", worst_stereo));
    c.note("round trip " + fmt("%.2g", worst_round) + ", conformal " + fmt("%.2g", worst_conf) + ", stereo " +
           fmt("%.2g", worst_stereo));
    return c.finish();
}

Outcome warp_suite() {
    Check c;
    const ImageBuffer img = smooth_image(256, 256, 2);
    const SphereGeom g = geometry_for(img);
    double id_err = 0.0;
    for (const auto& r : {forward_warp(img, MobiusParams::identity(), g), inverse_warp(img, MobiusParams::identity(), g)}) {
        for (std::size_t i = 0; i < img.data().size(); ++i) {
            id_err = std::max(id_err, std::abs(r.image.data()[i] - img.data()[i]));
        }
    }
    c.expect(id_err <= 1e-6, "identity pass-through error " + fmt("%.3g", id_err));
    Rng rng(3);
    double worst = 1e9;
    for (int t = 0; t < 20; ++t) {
        const MobiusParams p = random_theta(rng);
        const ImageBuffer back = inverse_warp(forward_warp(img, p, g).image, p, g).image;
        const CoverageMask interior = testing::round_trip_interior(p, g);
        c.expect(interior.interior_fraction() > 0.0, "empty interior for draw " + std::to_string(t));
        worst = std::min(worst, psnr(img, back, &interior));
    }
    c.expect(worst >= 30.0, "worst round-trip PSNR " + fmt("%.2f", worst) + " dB");
    c.note("identity error " + fmt("%.2g", id_err) + ", worst round-trip PSNR " + fmt("%.1f", worst) + " dB");
    return c.finish();
}

Outcome information_matching() {
    Check c;
    const std::array<double, 4> budgets{0.01, 0.03, 0.05, 0.10};
    const std::array<long long, 4> expected{3072, 9216, 15360, 30720};
    const SphereGeom g(640, 480);
    for (std::size_t i = 0; i < budgets.size(); ++i) {
        const PixelBudget b(budgets[i]);
        const long long n = budget_pixel_count(b, 640, 480);
        c.expect(n == expected[i], "budget_pixel_count(" + fmt("%.2f", budgets[i]) + ") = " + std::to_string(n));
        const GridSize grid = uniform_grid(b, 640, 480);
        for (Strategy s : {Strategy::uniform, Strategy::bass, Strategy::static_foveated, Strategy::sunflower,
                           Strategy::radial}) {
            SamplingSpec spec;
            spec.strategy = s;
            spec.budget = b;
            spec.fixation = {0.37, 0.61};
            if (s == Strategy::bass) {
                spec.theta = normalize({1.1, 0.05, -0.02, 0.95});
            }
            const auto got = static_cast<long long>(sample_layout(spec, 640, 480, g).count());
            const bool ok = (s == Strategy::uniform || s == Strategy::bass)
                                ? std::llabs(got - n) <= std::max(grid.width, grid.height) && got == grid.count()
                                : got == n;
            c.expect(ok, std::string(to_string(s)) + " at " + fmt("%.2f", budgets[i]) + " read " +
                             std::to_string(got) + " samples, budget " + std::to_string(n));
        }
    }
    c.note("3072/9216/15360/30720 matched");
    return c.finish();
}

Outcome bass_degeneracy() {
    Check c;
    const ImageBuffer img = structured_image(160, 120, 4);
    const SphereGeom g = geometry_for(img);
    double worst = 0.0;
    for (double b : {0.01, 0.03, 0.05, 0.10, 0.5}) {
        const ImageBuffer a = bass_pipeline(img, MobiusParams::identity(), PixelBudget(b), g);
        const ImageBuffer u = uniform_sample(img, PixelBudget(b));
        for (std::size_t i = 0; i < a.data().size(); ++i) {
            worst = std::max(worst, std::abs(a.data()[i] - u.data()[i]));
        }
    }
    c.expect(worst <= 1e-6, "max channel difference " + fmt("%.3g", worst));
    c.note("max channel difference " + fmt("%.2g", worst));
    return c.finish();
}

Outcome metric_formulas() {
    Check c;
    const ImageBuffer z = testing::constant_image(16, 12, {0, 0, 0});
    const ImageBuffer o = testing::constant_image(16, 12, {1, 1, 1});
    const ImageBuffer h = testing::constant_image(16, 12, {0.5, 0.5, 0.5});
    c.expect(mse(z, z) == 0.0 && mse(z, o) == 1.0 && mse(z, h) == 0.25, "mse examples");
    const ImageBuffer img = structured_image(128, 96, 5);
    c.expect(vsi(img, img) == 1.0, "vsi(I, I) = " + fmt("%.17g", vsi(img, img)));
    double worst_sym = 0.0;
    double prev = 1.0;
    bool monotone = true;
    std::string series;
    for (double sigma : {0.0, 0.01, 0.05, 0.1}) {
        const ImageBuffer n = testing::add_noise(img, sigma, 6);
        const double v = vsi(img, n);
        worst_sym = std::max(worst_sym, std::abs(v - vsi(n, img)));
        monotone = monotone && v <= prev;
        prev = v;
        series += (series.empty() ? "" : " ") + fmt("%.4f", v);
    }
    c.expect(worst_sym <= 1e-9, "vsi asymmetry " + fmt("%.3g", worst_sym));
    c.expect(monotone, "vsi under noise not decreasing: " + series);
    c.note("vsi under noise " + series);
    return c.finish();
}

Outcome spsa_estimator() {
    Check c;
    const Gradient coef{1, 2, 3, 4};
    const int n = 10000;
    Rng rng(1);
    Gradient mean{};
    long long calls = 0;
    for (int i = 0; i < n; ++i) {
        long long before = calls;
        const Gradient g = spsa_gradient(
            [&](const MobiusParams& p) {
                ++calls;
                return coef[0] * p.a + coef[1] * p.b + coef[2] * p.c + coef[3] * p.d;
            },
            MobiusParams::identity(), 0.1, rng);
        c.expect(calls - before == 2, "estimate " + std::to_string(i) + " used " + std::to_string(calls - before) +
                                          " objective calls");
        for (int k = 0; k < 4; ++k) {
            mean[k] += g[k] / n;
        }
    }
    std::string means;
    for (int k = 0; k < 4; ++k) {
        const double rel = std::abs(mean[k] - coef[k]) / coef[k];
        c.expect(rel <= 0.02, "coordinate " + std::to_string(k + 1) + " mean " + fmt("%.4f", mean[k]) + " is " +
                                  fmt("%.2f", 100 * rel) + "% from " + fmt("%.0f", coef[k]));
        means += (means.empty() ? "" : ", ") + fmt("%.4f", mean[k]);
    }
    c.note("mean (" + means + ")");
    return c.finish();
}

Outcome weight_dynamics() {
    Check c;
    std::vector<QuestionItem> items(4);
    for (auto& q : items) {
        q.weight = 0.25;
    }
    const auto upd = update_question_weights(items, {true, false, false, false}, 1.0);
    c.expect(std::abs(upd[0].weight - 0.25 * std::exp(0.25)) <= 1e-12, "updated weight " + fmt("%.15g", upd[0].weight));
    for (int i = 1; i < 4; ++i) {
        c.expect(upd[i].weight == 0.25, "untouched weight changed");
    }
    for (int i = 0; i < 4; ++i) {
        items[i].weight = 0.1 * (i + 1);
    }
    Rng rng(1);
    std::array<int, 4> hits{};
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        ++hits[sample_questions(items, 1, rng).front()];
    }
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) {
        worst = std::max(worst, std::abs(hits[i] / double(n) - 0.1 * (i + 1)));
    }
    c.expect(worst <= 0.01, "selection frequency off by " + fmt("%.4f", worst));
    c.note("worst frequency error " + fmt("%.4f", worst));
    return c.finish();
}

std::vector<QuestionItem> detail_questions() {
    std::vector<QuestionItem> qs(2);
    qs[0] = {"q0", "Is the texture in the marked region legible?", "A", {"A", "B"}, std::nullopt, 1.0};
    qs[1] = {"q1", "Can the pattern inside the marked region be read?", "A", {"A", "B"}, std::nullopt, 1.0};
    return qs;
}

AdaptConfig convergence_config() {
    AdaptConfig cfg;
    cfg.iterations = 25;
    cfg.questions_per_spsa = 2;
    cfg.budget = PixelBudget(0.05);
    cfg.learning_rate = 1.0;
    cfg.fd_step = 0.2;
    return cfg;
}

constexpr double kMockTau = 0.25;

Outcome end_to_end() {
    Check c;
    const DetailTaskConfig task;
    int converged = 0;
    for (int s = 0; s < 10; ++s) {
        const DetailItem item = make_detail_item(task, 1000 + s);
        RegionFidelityOracle oracle({item.image, item.target, kMockTau});
        AdaptConfig cfg = convergence_config();
        cfg.rng_seed = s;
        const AdaptResult r = adapt(item.image, detail_questions(), &oracle, cfg, geometry_for(item.image));
        const TraceEntry& first = r.loss_trace.front();
        const double initial = first.l_img + first.l_text.value_or(0.0);
        converged += r.best_loss <= 0.5 * initial;
    }
    c.expect(converged >= 8, "converged on " + std::to_string(converged) + "/10 seeds");

    const auto dir = testing::scratch_dir("acceptance-set");
    const auto dataset = load_dataset(write_detail_dataset(dir, 10, task, 7));
    int trials = 0, strict = 0, not_worse = 0;
    std::string accs;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ExperimentConfig ec;
        ec.budgets = {0.01, 0.05};
        ec.adapt = convergence_config();
        ec.adapt.rng_seed = seed;
        const auto report = run_experiment(dataset, ec, [](const DatasetItem& item, const ImageBuffer& img) {
            return std::make_unique<RegionFidelityOracle>(
                RegionFidelityConfig{img, region_to_pixels(*item.region, img.width(), img.height()), kMockTau});
        });
        for (double b : ec.budgets) {
            double uni = -1, bass = -1;
            for (const auto& row : report.summary_rows) {
                if (std::abs(row.budget - b) > 1e-12) continue;
                if (row.strategy == "uniform") uni = row.accuracy();
                if (row.strategy == "bass") bass = row.accuracy();
            }
            ++trials;
            strict += bass > uni;
            not_worse += bass >= uni;
            accs += (accs.empty() ? "" : " ") + fmt("%.0f", bass) + "/" + fmt("%.0f", uni);
        }
    }
    c.expect(not_worse == trials, "bass below uniform in " + std::to_string(trials - not_worse) + " trials");
    c.expect(strict * 10 >= trials * 8, "strict improvement in " + std::to_string(strict) + "/" +
                                            std::to_string(trials) + " trials");
    c.note("converged " + std::to_string(converged) + "/10; bass/uniform accuracy " + accs + "; strict " +
           std::to_string(strict) + "/" + std::to_string(trials));
    return c.finish();
}

Outcome table_metrics() {
    Check c;
    const double retained = accuracy_retained(73.54, 86.96);
    const double gain = delta_gain(55.05, 47.31);
    c.expect(std::abs(retained - 84.56) <= 0.02, "retained " + fmt("%.4f", retained));
    c.expect(std::abs(gain - 16.36) <= 0.02, "gain " + fmt("%.4f", gain));
    c.note("retained " + fmt("%.3f", retained) + ", gain " + fmt("%+.3f", gain));
    return c.finish();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
    Check c;
    const std::string cli = FOVEATE_CLI_PATH;
    const auto dir = testing::scratch_dir("acceptance-determinism");
    const std::string ds = (dir / "data").string();
    auto run = [](const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); };
    c.expect(run(cli + " synth --out-dir " + ds + " --count 4 --seed 11") == 0, "synth failed");
    std::array<std::string, 2> csv;
    for (int i = 0; i < 2; ++i) {
        const auto out = dir / ("run" + std::to_string(i) + ".csv");
        const std::string cmd = cli + " sweep --dataset " + ds + "/dataset.jsonl --strategy uniform --strategy bass" +
                                " --strategy static_foveated --strategy sunflower --strategy radial" +
                                " --budget 0.01 --budget 0.05 --mock region-fidelity --lr 1 --fd-step 0.2" +
                                " --questions-per-spsa 2 --seed 5 --jobs " + std::to_string(1 + 2 * i) +
                                " --out " + out.string();
        c.expect(run(cmd) == 0, "sweep run " + std::to_string(i) + " failed");
        csv[i] = slurp(out);
    }
    c.expect(!csv[0].empty(), "empty report");
    c.expect(csv[0] == csv[1], "reports differ");
    c.note(std::to_string(csv[0].size()) + " identical bytes (jobs 1 vs 3)");
    return c.finish();
}

struct Criterion {
    const char* name;
    double time_limit_s;  // 0 = none
    std::function<Outcome()> run;
};

}  // namespace
}  // namespace foveate

int main() {
    using namespace foveate;
    const std::vector<Criterion> criteria{
        {"geometry suite", 1.0, geometry_suite},
        {"warp suite", 10.0, warp_suite},
        {"information matching", 5.0, information_matching},
        {"bass degeneracy", 0.0, bass_degeneracy},
        {"metric formulas", 0.0, metric_formulas},
        {"spsa estimator", 2.0, spsa_estimator},
        {"weight dynamics", 0.0, weight_dynamics},
        {"end-to-end convergence", 180.0, end_to_end},
        {"table metrics", 0.0, table_metrics},
        {"determinism", 0.0, determinism},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = cr.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (o.pass && cr.time_limit_s > 0.0 && secs > cr.time_limit_s) {
            o = {false, "took " + fmt("%.2f", secs) + " s, limit " + fmt("%.0f", cr.time_limit_s) + " s"};
        }
        failed += !o.pass;
        std::printf("%s %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", cr.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
