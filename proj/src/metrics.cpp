#include "lipad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <tuple>

#include "lipad/csv.hpp"
#include "lipad/errors.hpp"

namespace lipad {

double roc_auc(const ScoredDataset& sd) {
    if (sd.scores.size() != sd.labels.size()) throw ContractError("roc_auc: score/label length mismatch");
    const long n = static_cast<long>(sd.scores.size());
    long n_pos = 0;
    for (int l : sd.labels) {
        if (l != 0 && l != 1) throw ContractError("roc_auc: labels must be 0/1");
        n_pos += l;
    }
    const long n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw ContractError("roc_auc: need both labels present");

    // rank-sum with average ranks over tie groups
    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](long a, long b) { return sd.scores[a] < sd.scores[b]; });
    double rank_sum_pos = 0.0;
    long i = 0;
    while (i < n) {
        long j = i;
        while (j < n && sd.scores[order[j]] == sd.scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j - 1) + 1.0; // 1-based
        for (long k = i; k < j; ++k)
            if (sd.labels[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double rank_fraction(double score, std::span<const double> reference) {
    if (reference.empty()) throw ContractError("rank_fraction: empty reference");
    double below = 0.0;
    for (double r : reference) {
        if (r < score)
            below += 1.0;
        else if (r == score)
            below += 0.5;
    }
    return below / static_cast<double>(reference.size());
}

double threshold_from_quantile(std::span<const double> train_scores, double gamma) {
    if (train_scores.empty()) throw ContractError("threshold_from_quantile: empty scores");
    if (gamma < 0.0 || gamma >= 0.5) throw ContractError("threshold_from_quantile: gamma must be in [0, 0.5)");
    std::vector<double> sorted(train_scores.begin(), train_scores.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = (static_cast<double>(sorted.size()) - 1.0) * (1.0 - gamma);
    const long lo = static_cast<long>(std::floor(pos));
    const long hi = std::min(lo + 1, static_cast<long>(sorted.size()) - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

void ExperimentReport::sort_rows() {
    std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::tie(a.experiment, a.method, a.digit, a.gamma, a.seed) <
               std::tie(b.experiment, b.method, b.digit, b.gamma, b.seed);
    });
}

std::vector<SummaryRow> ExperimentReport::summarize() const {
    std::vector<SummaryRow> out;
    for (const ReportRow& r : rows) {
        SummaryRow* cell = nullptr;
        for (SummaryRow& s : out)
            if (s.experiment == r.experiment && s.method == r.method && s.digit == r.digit && s.gamma == r.gamma)
                cell = &s;
        if (!cell) {
            out.push_back({r.experiment, r.method, r.digit, r.gamma, 0, 0.0, 0.0});
            cell = &out.back();
        }
        cell->n_seeds += 1;
        cell->mean += r.value; // accumulates sum; finalized below
    }
    for (SummaryRow& s : out) s.mean /= static_cast<double>(s.n_seeds);
    for (SummaryRow& s : out) {
        double var = 0.0;
        for (const ReportRow& r : rows)
            if (r.experiment == s.experiment && r.method == s.method && r.digit == s.digit && r.gamma == s.gamma)
                var += (r.value - s.mean) * (r.value - s.mean);
        const double sd = s.n_seeds > 0 ? std::sqrt(var / static_cast<double>(s.n_seeds)) : 0.0;
        s.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(std::max<long>(1, s.n_seeds)));
    }
    return out;
}

void ExperimentReport::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("report: cannot open '" + path + "'");
    out << "experiment,method,digit,gamma,seed,value\n";
    for (const ReportRow& r : rows)
        out << r.experiment << "," << r.method << "," << r.digit << "," << format_double(r.gamma) << "," << r.seed
            << "," << format_double(r.value) << "\n";
    if (!out) throw IoError("report: write failed for '" + path + "'");
}

void ExperimentReport::write_summary_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("report: cannot open '" + path + "'");
    out << "experiment,method,digit,gamma,n_seeds,mean,ci95\n";
    for (const SummaryRow& s : summarize())
        out << s.experiment << "," << s.method << "," << s.digit << "," << format_double(s.gamma) << "," << s.n_seeds
            << "," << format_double(s.mean) << "," << format_double(s.ci95) << "\n";
    if (!out) throw IoError("report: write failed for '" + path + "'");
}

double ExperimentReport::mean_value(const std::string& method, int digit, double gamma) const {
    double total = 0.0;
    long count = 0;
    for (const ReportRow& r : rows)
        if (r.method == method && r.digit == digit && r.gamma == gamma) {
            total += r.value;
            ++count;
        }
    if (count == 0) throw ContractError("report: no rows for " + method);
    return total / static_cast<double>(count);
}

void write_pgm16(const std::string& path, const std::vector<double>& values, long width, long height) {
    if (static_cast<long>(values.size()) != width * height) throw ContractError("write_pgm16: size mismatch");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_pgm16: cannot open '" + path + "'");
    out << "P5\n" << width << " " << height << "\n65535\n";
    for (double v : values) {
        const auto q = static_cast<std::uint16_t>(std::lround((v - lo) / span * 65535.0));
        const unsigned char bytes[2] = {static_cast<unsigned char>(q >> 8), static_cast<unsigned char>(q & 0xff)};
        out.write(reinterpret_cast<const char*>(bytes), 2);
    }
    if (!out) throw IoError("write_pgm16: write failed for '" + path + "'");
}

} // namespace lipad
