#include "cadet/eval/metrics.hpp"

#include "cadet/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace cadet {

std::int64_t ScoreSet::positives() const
{
    return std::count(labels.begin(), labels.end(), 1);
}

std::int64_t ScoreSet::negatives() const
{
    return std::count(labels.begin(), labels.end(), 0);
}

void ScoreSet::push(double score, int label, std::string id)
{
    scores.push_back(score);
    labels.push_back(label);
    if (!id.empty() || !ids.empty()) {
        ids.resize(scores.size() - 1);
        ids.push_back(std::move(id));
    }
}

void ScoreSet::validate() const
{
    if (scores.size() != labels.size()) throw UserError("score set: scores and labels differ in length");
    if (!ids.empty() && ids.size() != scores.size()) throw UserError("score set: ids and scores differ in length");
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw UserError("score set: labels must be 0 or 1");
        if (!std::isfinite(scores[i])) throw UserError("score set: non-finite score");
    }
}

void ScoreSet::require_both_classes(const char* metric) const
{
    validate();
    if (positives() == 0 || negatives() == 0) {
        throw UserError(std::string(metric) + " needs both real and fake samples");
    }
}

namespace {

/// Counts at each distinct score, ascending.
struct Histogram {
    std::vector<double> values;
    std::vector<std::int64_t> fakes, reals;
};

Histogram histogram(const ScoreSet& s)
{
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.scores[a] < s.scores[b]; });
    Histogram h;
    for (auto i : order) {
        if (h.values.empty() || s.scores[i] != h.values.back()) {
            h.values.push_back(s.scores[i]);
            h.fakes.push_back(0);
            h.reals.push_back(0);
        }
        (s.labels[i] ? h.fakes : h.reals).back()++;
    }
    return h;
}

/// (FPR, FNR) at thresholds values[0..k-1] and +inf.
struct Sweep {
    std::vector<double> fpr, fnr;
};

Sweep sweep(const ScoreSet& s)
{
    const auto h = histogram(s);
    const double P = static_cast<double>(s.positives());
    const double N = static_cast<double>(s.negatives());
    Sweep out;
    std::int64_t fakes_below = 0, reals_below = 0;
    for (std::size_t k = 0; k <= h.values.size(); ++k) {
        out.fpr.push_back((N - static_cast<double>(reals_below)) / N);
        out.fnr.push_back(static_cast<double>(fakes_below) / P);
        if (k < h.values.size()) {
            fakes_below += h.fakes[k];
            reals_below += h.reals[k];
        }
    }
    return out;
}

}  // namespace

double roc_auc(const ScoreSet& s)
{
    s.require_both_classes("AUC");
    const auto h = histogram(s);
    // Mann-Whitney: each fake beats every real strictly below it and ties half of those level with it.
    double wins = 0.0;
    std::int64_t reals_below = 0;
    for (std::size_t k = 0; k < h.values.size(); ++k) {
        wins += static_cast<double>(h.fakes[k]) *
                (static_cast<double>(reals_below) + 0.5 * static_cast<double>(h.reals[k]));
        reals_below += h.reals[k];
    }
    return wins / (static_cast<double>(s.positives()) * static_cast<double>(s.negatives()));
}

double eer(const ScoreSet& s)
{
    s.require_both_classes("EER");
    const auto sw = sweep(s);
    for (std::size_t k = 0; k < sw.fpr.size(); ++k) {
        const double d = sw.fpr[k] - sw.fnr[k];
        if (d > 0.0) continue;
        if (d == 0.0 || k == 0) return sw.fpr[k];
        const double dp = sw.fpr[k - 1] - sw.fnr[k - 1];
        const double t = dp / (dp - d);
        return sw.fpr[k - 1] + t * (sw.fpr[k] - sw.fpr[k - 1]);
    }
    return sw.fpr.back();  // unreachable: the +inf threshold has FPR 0, FNR 1
}

double tdr_at_fdr(const ScoreSet& s, double fdr)
{
    s.require_both_classes("TDR@FDR");
    if (!(fdr >= 0.0 && fdr <= 1.0)) throw UserError("fdr must lie in [0,1]");
    const auto sw = sweep(s);
    double best = 0.0;
    for (std::size_t k = 0; k < sw.fpr.size(); ++k) {
        if (sw.fpr[k] <= fdr) best = std::max(best, 1.0 - sw.fnr[k]);
    }
    return best;
}

double accuracy(const ScoreSet& s, double threshold)
{
    s.validate();
    if (s.size() == 0) throw UserError("accuracy of an empty score set");
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < s.size(); ++i) correct += (s.scores[i] >= threshold) == (s.labels[i] == 1);
    return static_cast<double>(correct) / static_cast<double>(s.size());
}

EvalReport make_report(const ScoreSet& s, const std::string& dataset)
{
    s.require_both_classes("evaluation");
    EvalReport r;
    r.dataset = dataset;
    r.count = static_cast<std::int64_t>(s.size());
    r.reals = s.negatives();
    r.fakes = s.positives();
    r.acc = accuracy(s, 0.5);
    r.auc = roc_auc(s);
    r.eer = cadet::eer(s);
    r.tdr = tdr_at_fdr(s, 0.1);
    return r;
}

std::string EvalReport::table() const
{
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "dataset   %s\n"
                  "samples   %lld (%lld real, %lld fake)\n"
                  "ACC       %.4f\n"
                  "AUC       %.4f\n"
                  "EER       %.4f\n"
                  "TDR@0.1   %.4f\n",
                  dataset.c_str(), static_cast<long long>(count), static_cast<long long>(reals),
                  static_cast<long long>(fakes), acc, auc, eer, tdr);
    return buf;
}

std::string EvalReport::csv_header()
{
    return "dataset,count,reals,fakes,acc,auc,eer,tdr_at_0.1";
}

std::string EvalReport::csv_row() const
{
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%lld,%.17g,%.17g,%.17g,%.17g", dataset.c_str(),
                  static_cast<long long>(count), static_cast<long long>(reals), static_cast<long long>(fakes), acc,
                  auc, eer, tdr);
    return buf;
}

void to_json(Json& j, const EvalReport& r)
{
    j = Json{{"dataset", r.dataset}, {"count", r.count}, {"reals", r.reals}, {"fakes", r.fakes},
             {"acc", r.acc},         {"auc", r.auc},     {"eer", r.eer},     {"tdr_at_0.1", r.tdr}};
}

void write_scores(const std::filesystem::path& path, const ScoreSet& s)
{
    s.validate();
    std::ofstream out(path);
    if (!out) throw UserError("cannot write " + path.string());
    out << "sample_id,score,label\n";
    char buf[64];
    for (std::size_t i = 0; i < s.size(); ++i) {
        std::snprintf(buf, sizeof(buf), ",%.17g,%d\n", s.scores[i], s.labels[i]);
        out << (s.ids.empty() ? std::to_string(i) : s.ids[i]) << buf;
    }
}

ScoreSet read_scores(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw UserError("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("sample_id,score,label", 0) != 0) throw ParseError("bad score file header", 1);
    ScoreSet s;
    std::int64_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c2 = line.rfind(',');
        const auto c1 = c2 == std::string::npos ? c2 : line.rfind(',', c2 - 1);
        if (c1 == std::string::npos) throw ParseError("expected sample_id,score,label", lineno);
        try {
            s.push(std::stod(line.substr(c1 + 1, c2 - c1 - 1)), std::stoi(line.substr(c2 + 1)), line.substr(0, c1));
        } catch (const std::logic_error&) {
            throw ParseError("bad number", lineno);
        }
    }
    s.validate();
    return s;
}

}  // namespace cadet
