#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "lipad/config.hpp"
#include "lipad/csv.hpp"
#include "lipad/datasets.hpp"
#include "lipad/digit_render.hpp"
#include "lipad/errors.hpp"
#include "lipad/experiments.hpp"
#include "lipad/metrics.hpp"
#include "lipad/models.hpp"
#include "lipad/trainer.hpp"
#include "lipad/transport.hpp"

namespace {

using namespace lipad;

int usage() {
    std::cerr << "usage:\n"
              << "  lipad train <config.json> [--key value ...]\n"
              << "  lipad score --model <file> --data <csv> [--out <csv>]\n"
              << "  lipad experiment <moons|black-image|contamination|tabular> <config.json> [--key value ...]\n"
              << "  lipad oracle w1 <a.csv> <b.csv> [--plan-out f] [--potentials-out f]\n"
              << "  lipad oracle duality <a.csv> <b.csv>\n"
              << "  lipad oracle prop2 <pn.csv> <pa.csv> --gamma <g>\n"
              << "  lipad oracle stability <pn.csv> <pa.csv> <pa_hat.csv>\n"
              << "  lipad datagen digits --out <dir> [--train-per-class n] [--test-per-class n] [--seed s]\n";
    return 2;
}

FlagOverrides collect_flags(int argc, char** argv, int start) {
    FlagOverrides flags;
    for (int i = start; i < argc; i += 2) {
        std::string key = argv[i];
        if (key.rfind("--", 0) != 0 || i + 1 >= argc)
            throw ConfigError("flags must come as '--key value' pairs (got '" + key + "')");
        flags.emplace_back(key.substr(2), argv[i + 1]);
    }
    return flags;
}

std::string take_flag(FlagOverrides& flags, const std::string& key, const std::string& fallback) {
    for (auto it = flags.begin(); it != flags.end(); ++it)
        if (it->first == key) {
            std::string v = it->second;
            flags.erase(it);
            return v;
        }
    return fallback;
}

void reject_leftover(const FlagOverrides& flags) {
    if (!flags.empty()) throw ConfigError("unknown flag '--" + flags.front().first + "'");
}

ot::EmpiricalDist load_points(const std::string& path) {
    const CsvTable t = read_csv(path);
    if (t.values.rows() < 1) throw IoError("oracle: '" + path + "' has no data rows");
    return ot::EmpiricalDist::uniform(t.values);
}

Tensor nominal_training_points(const RunConfig& cfg) {
    if (cfg.data_kind == "moons") return make_moons(cfg.moons_n, cfg.moons_noise, cfg.seed).points;
    if (cfg.data_kind == "tabular") {
        const LabeledData all = synthetic_tabular(cfg.tabular_n, cfg.seed);
        std::vector<long> rows;
        for (long i = 0; i < all.size(); ++i)
            if (all.labels[i] == 0) rows.push_back(i);
        return select_rows(all, rows).points;
    }
    if (cfg.data_csv.empty()) throw ConfigError("train: data_kind 'csv' needs data_csv");
    const CsvTable t = read_csv(cfg.data_csv);
    if (!t.has_labels) return t.values;
    std::vector<long> rows;
    for (long i = 0; i < t.values.rows(); ++i)
        if (t.labels[i] == 0) rows.push_back(i);
    Tensor out(static_cast<long>(rows.size()), t.values.cols());
    for (size_t i = 0; i < rows.size(); ++i)
        for (long c = 0; c < t.values.cols(); ++c) out.at(static_cast<long>(i), c) = t.values.at(rows[i], c);
    return out;
}

int cmd_train(int argc, char** argv) {
    if (argc < 3) return usage();
    const RunConfig cfg = parse_config_file(argv[2], collect_flags(argc, argv, 3));
    const Tensor data = nominal_training_points(cfg);
    const CorruptionProcess corruption = cfg.corruption_set ? cfg.corruption : CorruptionProcess::gaussian(1.0);

    const CriticState state = train(data, corruption, default_critic_spec(data.cols()), cfg.train);

    if (const auto dir = std::filesystem::path(cfg.model_path).parent_path(); !dir.empty())
        std::filesystem::create_directories(dir);
    save_model(state.params, cfg.model_path);
    write_trace_csv(state.trace, cfg.trace_path);

    const Tensor train_scores = anomaly_score(state, data);
    double mean = 0.0;
    for (long i = 0; i < train_scores.size(); ++i) mean += train_scores[i];
    mean /= static_cast<double>(train_scores.size());
    std::printf("model=%s\ntrace=%s\nsteps=%ld\nmean_train_anomaly_score=%.17g\n", cfg.model_path.c_str(),
                cfg.trace_path.c_str(), state.step, mean);
    return 0;
}

int cmd_score(int argc, char** argv) {
    FlagOverrides flags = collect_flags(argc, argv, 2);
    const std::string model_path = take_flag(flags, "model", "");
    const std::string data_path = take_flag(flags, "data", "");
    const std::string out_path = take_flag(flags, "out", "");
    reject_leftover(flags);
    if (model_path.empty() || data_path.empty()) throw ConfigError("score: --model and --data are required");

    const ParamSet params = load_model(model_path);
    const CsvTable t = read_csv(data_path);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw IoError("score: cannot open '" + out_path + "'");
        out = &file;
    }
    (*out) << "score\n";
    if (t.values.rows() == 0) return 0;
    const Tensor scores = anomaly_score(params, t.values);
    for (long i = 0; i < scores.rows(); ++i) (*out) << format_double(scores.at(i, 0)) << "\n";
    return 0;
}

int cmd_experiment(int argc, char** argv) {
    if (argc < 4) return usage();
    const std::string kind = argv[2];
    RunConfig cfg = parse_config_file(argv[3], collect_flags(argc, argv, 4));
    if (kind != "moons" && kind != "black-image" && kind != "contamination" && kind != "tabular")
        throw ConfigError("experiment: unknown kind '" + kind + "'");
    const ExperimentReport report = run_experiment(kind, cfg);
    std::printf("experiment=%s\nrows=%zu\nreport=%s/report.csv\nsummary=%s/summary.csv\n", kind.c_str(),
                report.rows.size(), cfg.output_dir.c_str(), cfg.output_dir.c_str());
    return 0;
}

void write_plan_csv(const std::string& path, const ot::W1Result& res) {
    std::ofstream out(path);
    if (!out) throw IoError("oracle: cannot open '" + path + "'");
    out << "i,j,mass\n";
    const Tensor& pi = res.plan.coupling;
    for (long i = 0; i < pi.rows(); ++i)
        for (long j = 0; j < pi.cols(); ++j)
            if (pi.at(i, j) > 0.0) out << i << "," << j << "," << format_double(pi.at(i, j)) << "\n";
}

void write_potentials_csv(const std::string& path, const ot::W1Result& res) {
    std::ofstream out(path);
    if (!out) throw IoError("oracle: cannot open '" + path + "'");
    out << "side,index,value\n";
    for (size_t i = 0; i < res.potentials.phi.size(); ++i)
        out << "phi," << i << "," << format_double(res.potentials.phi[i]) << "\n";
    for (size_t j = 0; j < res.potentials.psi.size(); ++j)
        out << "psi," << j << "," << format_double(res.potentials.psi[j]) << "\n";
}

int cmd_oracle(int argc, char** argv) {
    if (argc < 3) return usage();
    const std::string sub = argv[2];
    if (sub == "w1" || sub == "duality") {
        if (argc < 5) return usage();
        FlagOverrides flags = collect_flags(argc, argv, 5);
        const std::string plan_out = take_flag(flags, "plan-out", "");
        const std::string pot_out = take_flag(flags, "potentials-out", "");
        reject_leftover(flags);
        const ot::W1Result res = ot::exact_w1(load_points(argv[3]), load_points(argv[4]));
        if (sub == "w1") {
            std::printf("w1=%s\n", format_double(res.cost).c_str());
        } else {
            double dual = res.cost - res.duality_gap; // primal and dual agree to the reported gap
            std::printf("primal=%s\ndual=%s\ngap=%.3g\nstrong_duality=%s\n", format_double(res.cost).c_str(),
                        format_double(dual).c_str(), res.duality_gap, res.duality_gap <= 1e-9 ? "PASS" : "FAIL");
        }
        if (!plan_out.empty()) write_plan_csv(plan_out, res);
        if (!pot_out.empty()) write_potentials_csv(pot_out, res);
        return 0;
    }
    if (sub == "prop2") {
        if (argc < 5) return usage();
        FlagOverrides flags = collect_flags(argc, argv, 5);
        const std::string gamma_str = take_flag(flags, "gamma", "0.1");
        reject_leftover(flags);
        const double gamma = std::stod(gamma_str);
        const ot::Prop2Report rep = ot::check_prop2_bound(load_points(argv[3]), load_points(argv[4]), gamma);
        std::printf("A=%s\nB=%s\nholds=%s\ndegenerate_basis=%s\nw_pn_pa=%s\nw_m_pa=%s\nw_pn_m=%s\n",
                    format_double(rep.a_value).c_str(), format_double(rep.b_value).c_str(),
                    rep.holds ? "PASS" : "FAIL", rep.degenerate ? "yes" : "no", format_double(rep.w_pn_pa).c_str(),
                    format_double(rep.w_m_pa).c_str(), format_double(rep.w_pn_m).c_str());
        return 0;
    }
    if (sub == "stability") {
        if (argc < 6) return usage();
        const ot::StabilityReport rep =
            ot::check_stability_triangle(load_points(argv[3]), load_points(argv[4]), load_points(argv[5]));
        std::printf("lhs=%s\nrhs=%s\nholds=%s\n", format_double(rep.lhs).c_str(), format_double(rep.rhs).c_str(),
                    rep.holds ? "PASS" : "FAIL");
        return 0;
    }
    return usage();
}

int cmd_datagen(int argc, char** argv) {
    if (argc < 3 || std::string(argv[2]) != "digits") return usage();
    FlagOverrides flags = collect_flags(argc, argv, 3);
    const std::string out_dir = take_flag(flags, "out", "");
    const long train_pc = std::stol(take_flag(flags, "train-per-class", "6000"));
    const long test_pc = std::stol(take_flag(flags, "test-per-class", "1000"));
    const std::uint64_t seed = std::stoull(take_flag(flags, "seed", "271828"));
    reject_leftover(flags);
    if (out_dir.empty()) throw ConfigError("datagen: --out is required");
    write_digit_corpus_idx(out_dir, train_pc, test_pc, seed);
    std::printf("wrote %ldx10 train and %ldx10 test images under %s\n", train_pc, test_pc, out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) return usage();
    const std::string cmd = argv[1];
    try {
        if (cmd == "train") return cmd_train(argc, argv);
        if (cmd == "score") return cmd_score(argc, argv);
        if (cmd == "experiment") return cmd_experiment(argc, argv);
        if (cmd == "oracle") return cmd_oracle(argc, argv);
        if (cmd == "datagen") return cmd_datagen(argc, argv);
        return usage();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const DimensionError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const ContractError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
