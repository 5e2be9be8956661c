#include "lipad/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <thread>

#include "lipad/csv.hpp"
#include "lipad/digit_render.hpp"
#include "lipad/errors.hpp"

namespace lipad {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kCorpusSeed = 271828; // fixed so every run shares the cache

void parallel_cells(long n_cells, long n_threads, const std::function<void(long)>& fn) {
    if (n_threads <= 1 || n_cells <= 1) {
        for (long i = 0; i < n_cells; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        while (true) {
            const long i = next.fetch_add(1);
            if (i >= n_cells) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const long use = std::min(n_threads, n_cells);
    pool.reserve(use);
    for (long t = 0; t < use; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

bool wants(const RunConfig& cfg, const std::string& method) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), method) != cfg.methods.end();
}

TrainConfig critic_config(const RunConfig& cfg, std::uint64_t seed) {
    TrainConfig t = cfg.train;
    t.seed = seed;
    return t;
}

TrainConfig ae_config(const RunConfig& cfg, std::uint64_t seed) {
    TrainConfig t = cfg.train;
    t.seed = seed;
    t.beta1 = 0.9; // default optimizer parameters for the non-Lipschitz models
    return t;
}

std::uint64_t cell_seed(std::uint64_t seed, const std::string& role, std::uint64_t a, std::uint64_t b) {
    return Rng(seed).child(role).child(a).child(b).seed();
}

// distance from every query row to its nearest row of `pts`, GEMM-blocked
std::vector<double> nearest_distances(const Tensor& queries, const Tensor& pts) {
    std::vector<double> out(queries.rows());
    const long block = std::max<long>(1, (1 << 21) / std::max<long>(1, pts.rows()));
    for (long q0 = 0; q0 < queries.rows(); q0 += block) {
        const long qn = std::min(block, queries.rows() - q0);
        Tensor sub(qn, queries.cols());
        for (long r = 0; r < qn; ++r)
            for (long c = 0; c < queries.cols(); ++c) sub.at(r, c) = queries.at(q0 + r, c);
        const Tensor d2 = pairwise_sqdist(sub, pts);
        for (long r = 0; r < qn; ++r) {
            double best = d2.at(r, 0);
            for (long j = 1; j < pts.rows(); ++j) best = std::min(best, d2.at(r, j));
            out[q0 + r] = std::sqrt(std::max(0.0, best));
        }
    }
    return out;
}

std::vector<double> tensor_column(const Tensor& t) {
    std::vector<double> v(t.rows());
    for (long i = 0; i < t.rows(); ++i) v[i] = t.at(i, 0);
    return v;
}

RayCheck check_ray(int ray, const std::vector<double>& scores, const std::vector<double>& dists,
                   double max_train_score) {
    RayCheck rc;
    rc.ray = ray;
    long pairs = 0, violations = 0;
    bool exceeds = true;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (i + 1 < scores.size() && dists[i] > 2.0 && dists[i + 1] > 2.0) {
            ++pairs;
            if (scores[i + 1] < scores[i] - 1e-12) ++violations;
        }
        if (dists[i] > 5.0 && scores[i] <= max_train_score) exceeds = false;
    }
    rc.violation_frac = pairs > 0 ? static_cast<double>(violations) / static_cast<double>(pairs) : 0.0;
    rc.monotone_ok = rc.violation_frac <= 0.05;
    rc.exceeds_ok = exceeds;
    return rc;
}

void write_grid_files(const std::string& stem, const std::vector<double>& scores, const std::vector<double>& xs,
                      const std::vector<double>& ys) {
    const long h = static_cast<long>(ys.size());
    const long w = static_cast<long>(xs.size());
    write_pgm16(stem + ".pgm", scores, w, h);
    std::ofstream out(stem + ".csv");
    if (!out) throw IoError("grid: cannot open '" + stem + ".csv'");
    out << "x,y,score\n";
    for (long r = 0; r < h; ++r)
        for (long c = 0; c < w; ++c)
            out << format_double(xs[c]) << "," << format_double(ys[r]) << ","
                << format_double(scores[r * w + c]) << "\n";
}

} // namespace

DenseNetSpec default_critic_spec(long input_dim) {
    DenseNetSpec s;
    s.input_dim = input_dim;
    s.hidden_dims = {256, 128, 64};
    s.output_dim = 1;
    return s;
}

AutoencoderSpec default_ae_spec(long input_dim) {
    AutoencoderSpec s;
    s.input_dim = input_dim;
    if (input_dim == 784) {
        s.encoder_dims = {256, 128, 64};
        s.bottleneck_dim = 32;
    } else if (input_dim == 2) {
        s.encoder_dims = {128, 96, 64};
        s.bottleneck_dim = 1;
    } else {
        // the reference dense autoencoder layout (10 -> 128/96/64 -> 10, mirrored)
        s.encoder_dims = {128, 96, 64};
        s.bottleneck_dim = std::min<long>(10, input_dim);
    }
    return s;
}

MnistPaths ensure_digit_corpus(const RunConfig& cfg) {
    if (cfg.mnist.complete()) return cfg.mnist;
    const std::string dir = cfg.digits_cache_dir.empty() ? cfg.output_dir + "/digit-corpus" : cfg.digits_cache_dir;
    MnistPaths p;
    p.train_images = dir + "/train-images-idx3-ubyte";
    p.train_labels = dir + "/train-labels-idx1-ubyte";
    p.test_images = dir + "/t10k-images-idx3-ubyte";
    p.test_labels = dir + "/t10k-labels-idx1-ubyte";
    const bool have = fs::exists(p.train_images) && fs::exists(p.train_labels) && fs::exists(p.test_images) &&
                      fs::exists(p.test_labels);
    if (!have)
        write_digit_corpus_idx(dir, cfg.digits_train_per_class, cfg.digits_test_per_class, kCorpusSeed);
    return p;
}

MoonsResult run_moons_experiment(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    const CorruptionProcess corruption =
        cfg.corruption_set ? cfg.corruption : CorruptionProcess::gaussian(1.0);

    MoonsResult result;
    result.report.name = "moons";

    // grid axes: x in [-2,3], y in [2,-1.5] top-down (image row order)
    std::vector<double> xs(cfg.grid_size), ys(cfg.grid_size);
    for (long i = 0; i < cfg.grid_size; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(cfg.grid_size - 1);
        xs[i] = -2.0 + 5.0 * t;
        ys[i] = 2.0 - 3.5 * t;
    }
    Tensor grid(cfg.grid_size * cfg.grid_size, 2);
    for (long r = 0; r < cfg.grid_size; ++r)
        for (long c = 0; c < cfg.grid_size; ++c) {
            grid.at(r * cfg.grid_size + c, 0) = xs[c];
            grid.at(r * cfg.grid_size + c, 1) = ys[r];
        }

    for (std::uint64_t seed : cfg.seeds) {
        const LabeledData data = make_moons(cfg.moons_n, cfg.moons_noise, seed);

        const CriticState critic = train(data.points, corruption, default_critic_spec(2), critic_config(cfg, seed));
        const AeModel ae = ae_train(data.points, default_ae_spec(2), 0.0, ae_config(cfg, seed));

        const std::vector<double> lad_grid = tensor_column(anomaly_score(critic, grid));
        const std::vector<double> ae_grid = ae_score(ae, grid);
        const std::vector<double> grid_dist = nearest_distances(grid, data.points);

        MoonsSeedResult sr;
        sr.seed = seed;
        double lf = 0, ln = 0, af = 0, an = 0;
        long nf = 0, nn = 0;
        for (size_t i = 0; i < lad_grid.size(); ++i) {
            if (grid_dist[i] > 1.0) {
                lf += lad_grid[i];
                af += ae_grid[i];
                ++nf;
            } else if (grid_dist[i] < 0.1) {
                ln += lad_grid[i];
                an += ae_grid[i];
                ++nn;
            }
        }
        if (nf > 0 && nn > 0) {
            sr.lad_far_mean = lf / nf;
            sr.lad_near_mean = ln / nn;
            sr.ae_far_mean = af / nf;
            sr.ae_near_mean = an / nn;
        }

        // outward rays from the data centroid
        double cx = 0, cy = 0;
        for (long i = 0; i < data.points.rows(); ++i) {
            cx += data.points.at(i, 0);
            cy += data.points.at(i, 1);
        }
        cx /= static_cast<double>(data.points.rows());
        cy /= static_cast<double>(data.points.rows());

        const std::vector<double> lad_train = tensor_column(anomaly_score(critic, data.points));
        const std::vector<double> ae_train_scores = ae_score(ae, data.points);
        const double lad_max_train = *std::max_element(lad_train.begin(), lad_train.end());
        const double ae_max_train = *std::max_element(ae_train_scores.begin(), ae_train_scores.end());

        std::ofstream rays_csv(cfg.output_dir + "/rays_seed" + std::to_string(seed) + ".csv");
        rays_csv << "ray,s,x,y,dist,lad_score,ae_score\n";

        constexpr int kRays = 8;
        constexpr double kStep = 0.05;
        constexpr double kMaxS = 12.0;
        sr.lad_far_ok = true;
        sr.ae_fails_some_ray = false;
        for (int ray = 0; ray < kRays; ++ray) {
            const double ang = 2.0 * std::numbers::pi * ray / kRays;
            const long steps = static_cast<long>(kMaxS / kStep) + 1;
            Tensor pts(steps, 2);
            for (long i = 0; i < steps; ++i) {
                pts.at(i, 0) = cx + std::cos(ang) * kStep * static_cast<double>(i);
                pts.at(i, 1) = cy + std::sin(ang) * kStep * static_cast<double>(i);
            }
            const std::vector<double> dist = nearest_distances(pts, data.points);
            const std::vector<double> lad_s = tensor_column(anomaly_score(critic, pts));
            const std::vector<double> ae_s = ae_score(ae, pts);

            for (long i = 0; i < steps; ++i)
                rays_csv << ray << "," << format_double(kStep * i) << "," << format_double(pts.at(i, 0)) << ","
                         << format_double(pts.at(i, 1)) << "," << format_double(dist[i]) << ","
                         << format_double(lad_s[i]) << "," << format_double(ae_s[i]) << "\n";

            const RayCheck lc = check_ray(ray, lad_s, dist, lad_max_train);
            const RayCheck ac = check_ray(ray, ae_s, dist, ae_max_train);
            sr.lad_rays.push_back(lc);
            sr.ae_rays.push_back(ac);
            if (!(lc.monotone_ok && lc.exceeds_ok)) sr.lad_far_ok = false;
            if (!(ac.monotone_ok && ac.exceeds_ok)) sr.ae_fails_some_ray = true;
        }

        // post-training empirical Lipschitz check on the data bounding box
        {
            double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
            for (long i = 0; i < data.points.rows(); ++i) {
                x0 = std::min(x0, data.points.at(i, 0));
                x1 = std::max(x1, data.points.at(i, 0));
                y0 = std::min(y0, data.points.at(i, 1));
                y1 = std::max(y1, data.points.at(i, 1));
            }
            Rng rng = Rng(seed).child("lipschitz-pairs");
            constexpr long kPairs = 1000;
            Tensor us(kPairs, 2), vs(kPairs, 2);
            for (long i = 0; i < kPairs; ++i) {
                us.at(i, 0) = rng.uniform(x0, x1);
                us.at(i, 1) = rng.uniform(y0, y1);
                vs.at(i, 0) = rng.uniform(x0, x1);
                vs.at(i, 1) = rng.uniform(y0, y1);
            }
            const Tensor fu = critic_forward(critic.params, us);
            const Tensor fv = critic_forward(critic.params, vs);
            long ok = 0, total = 0;
            for (long i = 0; i < kPairs; ++i) {
                const double dx = us.at(i, 0) - vs.at(i, 0);
                const double dy = us.at(i, 1) - vs.at(i, 1);
                const double d = std::sqrt(dx * dx + dy * dy);
                if (d < 1e-9) continue;
                ++total;
                if (std::abs(fu.at(i, 0) - fv.at(i, 0)) / d <= 1.25) ++ok;
            }
            sr.lipschitz_ok_frac = total > 0 ? static_cast<double>(ok) / static_cast<double>(total) : 1.0;
        }

        write_grid_files(cfg.output_dir + "/grid_lad_seed" + std::to_string(seed), lad_grid, xs, ys);
        write_grid_files(cfg.output_dir + "/grid_ae_seed" + std::to_string(seed), ae_grid, xs, ys);
        write_trace_csv(critic.trace, cfg.output_dir + "/trace_lad_seed" + std::to_string(seed) + ".csv");

        result.report.add({"moons", "lad", -1, 0.0, seed, sr.lad_far_mean - sr.lad_near_mean});
        result.report.add({"moons", "ae", -1, 0.0, seed, sr.ae_far_mean - sr.ae_near_mean});
        result.seeds.push_back(std::move(sr));
    }

    result.report.sort_rows();
    result.report.write_csv(cfg.output_dir + "/report.csv");
    result.report.write_summary_csv(cfg.output_dir + "/summary.csv");
    return result;
}

ExperimentReport run_black_image_experiment(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    const MnistPaths paths = ensure_digit_corpus(cfg);
    const LabeledData train_corpus = load_mnist_idx(paths.train_images, paths.train_labels);
    const LabeledData test_corpus = load_mnist_idx(paths.test_images, paths.test_labels);
    const CorruptionProcess corruption =
        cfg.corruption_set ? cfg.corruption : CorruptionProcess::patch(4, 28);
    const Tensor black = black_image();

    struct Cell {
        int digit;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (int d : cfg.digits)
        for (std::uint64_t s : cfg.seeds) cells.push_back({d, s});

    std::vector<std::vector<ReportRow>> cell_rows(cells.size());
    parallel_cells(static_cast<long>(cells.size()), cfg.effective_threads(), [&](long ci) {
        const auto [digit, seed] = cells[ci];
        const LabeledData nominal = filter_by_class(train_corpus, digit, true);
        const LabeledData test_digit = filter_by_class(test_corpus, digit, true);
        auto& rows = cell_rows[ci];

        if (wants(cfg, "lad")) {
            const CriticState critic = train(nominal.points, corruption, default_critic_spec(784),
                                             critic_config(cfg, cell_seed(seed, "bi-lad", digit, 0)));
            const std::vector<double> refs = tensor_column(anomaly_score(critic, test_digit.points));
            const double black_score = anomaly_score(critic, black).scalar_value();
            rows.push_back({"black-image", "lad", digit, 0.0, seed, rank_fraction(black_score, refs)});
        }
        if (wants(cfg, "ae")) {
            const AeModel ae =
                ae_train(nominal.points, default_ae_spec(784), 0.0, ae_config(cfg, cell_seed(seed, "bi-ae", digit, 0)));
            const std::vector<double> refs = ae_score(ae, test_digit.points);
            const double black_score = ae_score(ae, black)[0];
            rows.push_back({"black-image", "ae", digit, 0.0, seed, rank_fraction(black_score, refs)});
        }
        if (wants(cfg, "dcae")) {
            const AeModel dcae = ae_train(nominal.points, default_ae_spec(784), cfg.ae_denoising_sigma,
                                          ae_config(cfg, cell_seed(seed, "bi-dcae", digit, 0)));
            const std::vector<double> refs = ae_score(dcae, test_digit.points);
            const double black_score = ae_score(dcae, black)[0];
            rows.push_back({"black-image", "dcae", digit, 0.0, seed, rank_fraction(black_score, refs)});
        }
    });

    ExperimentReport report;
    report.name = "black-image";
    for (auto& rows : cell_rows)
        for (auto& r : rows) report.add(std::move(r));
    report.sort_rows();
    report.write_csv(cfg.output_dir + "/report.csv");
    report.write_summary_csv(cfg.output_dir + "/summary.csv");
    return report;
}

ExperimentReport run_contamination_sweep(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    const MnistPaths paths = ensure_digit_corpus(cfg);
    const LabeledData train_corpus = load_mnist_idx(paths.train_images, paths.train_labels);
    const LabeledData test_corpus = load_mnist_idx(paths.test_images, paths.test_labels);
    const CorruptionProcess corruption =
        cfg.corruption_set ? cfg.corruption : CorruptionProcess::patch(4, 28);

    struct Cell {
        int digit;
        long gamma_idx;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (int d : cfg.digits)
        for (long g = 0; g < static_cast<long>(cfg.gammas.size()); ++g)
            for (std::uint64_t s : cfg.seeds) cells.push_back({d, g, s});

    std::vector<std::vector<ReportRow>> cell_rows(cells.size());
    parallel_cells(static_cast<long>(cells.size()), cfg.effective_threads(), [&](long ci) {
        const auto [digit, gamma_idx, seed] = cells[ci];
        const double gamma = cfg.gammas[gamma_idx];
        const LabeledData nominal = filter_by_class(train_corpus, digit, true);
        const LabeledData pool = filter_by_class(train_corpus, digit, false);
        const LabeledData contaminated =
            contaminate(nominal, pool, gamma, cell_seed(seed, "contaminate", digit, gamma_idx));

        ScoredDataset sd;
        sd.labels.resize(test_corpus.size());
        for (long i = 0; i < test_corpus.size(); ++i) sd.labels[i] = test_corpus.class_ids[i] == digit ? 0 : 1;

        auto& rows = cell_rows[ci];
        auto push_auc = [&](const std::string& method, std::vector<double> scores) {
            sd.scores = std::move(scores);
            rows.push_back({"contamination", method, digit, gamma, seed, roc_auc(sd)});
        };

        if (wants(cfg, "lad")) {
            const CriticState critic = train(contaminated.points, corruption, default_critic_spec(784),
                                             critic_config(cfg, cell_seed(seed, "sweep-lad", digit, gamma_idx)));
            push_auc("lad", tensor_column(anomaly_score(critic, test_corpus.points)));
        }
        if (wants(cfg, "ae")) {
            const AeModel ae = ae_train(contaminated.points, default_ae_spec(784), 0.0,
                                        ae_config(cfg, cell_seed(seed, "sweep-ae", digit, gamma_idx)));
            push_auc("ae", ae_score(ae, test_corpus.points));
        }
        if (wants(cfg, "dcae")) {
            const AeModel dcae = ae_train(contaminated.points, default_ae_spec(784), cfg.ae_denoising_sigma,
                                          ae_config(cfg, cell_seed(seed, "sweep-dcae", digit, gamma_idx)));
            push_auc("dcae", ae_score(dcae, test_corpus.points));
        }
        if (wants(cfg, "lof")) {
            const KnnIndex index(contaminated.points);
            push_auc("lof", LofModel(index, cfg.lof_k).scores(test_corpus.points));
        }
        if (wants(cfg, "knn")) {
            const KnnIndex index(contaminated.points);
            push_auc("knn", knn_sum_scores(index, test_corpus.points, cfg.knn_k));
        }
    });

    ExperimentReport report;
    report.name = "contamination";
    for (auto& rows : cell_rows)
        for (auto& r : rows) report.add(std::move(r));
    report.sort_rows();
    report.write_csv(cfg.output_dir + "/report.csv");
    report.write_summary_csv(cfg.output_dir + "/summary.csv");
    return report;
}

ExperimentReport run_tabular_sweep(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    const CorruptionProcess corruption =
        cfg.corruption_set ? cfg.corruption : CorruptionProcess::gaussian(1.0);

    // one fixed dataset; seeds vary initialization and contamination draws
    const LabeledData all = synthetic_tabular(cfg.tabular_n, cfg.seed);
    std::vector<long> nominal_rows, anomaly_rows;
    for (long i = 0; i < all.size(); ++i) (all.labels[i] == 0 ? nominal_rows : anomaly_rows).push_back(i);

    const long n_train = static_cast<long>(std::floor(cfg.tabular_train_fraction *
                                                      static_cast<double>(nominal_rows.size())));
    const long a_pool = static_cast<long>(anomaly_rows.size()) / 2;

    const LabeledData train_nominal =
        select_rows(all, std::vector<long>(nominal_rows.begin(), nominal_rows.begin() + n_train));
    const LabeledData pool =
        select_rows(all, std::vector<long>(anomaly_rows.begin(), anomaly_rows.begin() + a_pool));

    std::vector<long> test_rows(nominal_rows.begin() + n_train, nominal_rows.end());
    test_rows.insert(test_rows.end(), anomaly_rows.begin() + a_pool, anomaly_rows.end());
    const LabeledData test = select_rows(all, test_rows);

    struct Cell {
        long gamma_idx;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (long g = 0; g < static_cast<long>(cfg.gammas.size()); ++g)
        for (std::uint64_t s : cfg.seeds) cells.push_back({g, s});

    std::vector<std::vector<ReportRow>> cell_rows(cells.size());
    parallel_cells(static_cast<long>(cells.size()), cfg.effective_threads(), [&](long ci) {
        const auto [gamma_idx, seed] = cells[ci];
        const double gamma = cfg.gammas[gamma_idx];
        const LabeledData contaminated =
            contaminate(train_nominal, pool, gamma, cell_seed(seed, "tab-contaminate", gamma_idx, 0));

        ScoredDataset sd;
        sd.labels = test.labels;
        auto& rows = cell_rows[ci];
        auto push_auc = [&](const std::string& method, std::vector<double> scores) {
            sd.scores = std::move(scores);
            rows.push_back({"tabular", method, -1, gamma, seed, roc_auc(sd)});
        };

        if (wants(cfg, "lad")) {
            const CriticState critic = train(contaminated.points, corruption, default_critic_spec(10),
                                             critic_config(cfg, cell_seed(seed, "tab-lad", gamma_idx, 0)));
            push_auc("lad", tensor_column(anomaly_score(critic, test.points)));
        }
        if (wants(cfg, "ae")) {
            const AeModel ae = ae_train(contaminated.points, default_ae_spec(10), 0.0,
                                        ae_config(cfg, cell_seed(seed, "tab-ae", gamma_idx, 0)));
            push_auc("ae", ae_score(ae, test.points));
        }
        if (wants(cfg, "dcae")) {
            const AeModel dcae = ae_train(contaminated.points, default_ae_spec(10), cfg.ae_denoising_sigma,
                                          ae_config(cfg, cell_seed(seed, "tab-dcae", gamma_idx, 0)));
            push_auc("dcae", ae_score(dcae, test.points));
        }
        if (wants(cfg, "lof")) {
            const KnnIndex index(contaminated.points);
            push_auc("lof", LofModel(index, cfg.lof_k).scores(test.points));
        }
        if (wants(cfg, "knn")) {
            const KnnIndex index(contaminated.points);
            push_auc("knn", knn_sum_scores(index, test.points, cfg.knn_k));
        }
    });

    ExperimentReport report;
    report.name = "tabular";
    for (auto& rows : cell_rows)
        for (auto& r : rows) report.add(std::move(r));
    report.sort_rows();
    report.write_csv(cfg.output_dir + "/report.csv");
    report.write_summary_csv(cfg.output_dir + "/summary.csv");
    return report;
}

ExperimentReport run_experiment(const std::string& kind, const RunConfig& cfg) {
    if (kind == "moons") return run_moons_experiment(cfg).report;
    if (kind == "black-image") return run_black_image_experiment(cfg);
    if (kind == "contamination") return run_contamination_sweep(cfg);
    if (kind == "tabular") return run_tabular_sweep(cfg);
    throw ConfigError("experiment: unknown kind '" + kind + "' (want moons|black-image|contamination|tabular)");
}

} // namespace lipad
