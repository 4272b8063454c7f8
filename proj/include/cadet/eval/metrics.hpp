#pragma once

#include "cadet/core/config.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cadet {

/// Per-sample fake probabilities with ground truth (1 = fake).
struct ScoreSet {
    std::vector<double> scores;
    std::vector<int> labels;
    std::vector<std::string> ids;  // optional, for score dumps

    std::size_t size() const { return scores.size(); }
    std::int64_t positives() const;
    std::int64_t negatives() const;
    void push(double score, int label, std::string id = {});

    /// Throws UserError unless lengths agree, labels are 0/1 and scores are finite.
    void validate() const;
    /// validate() plus both classes present.
    void require_both_classes(const char* metric) const;
};

/// Probability that a random fake outscores a random real, ties counted 1/2.
double roc_auc(const ScoreSet& s);

/// Equal error rate. Thresholds sweep every distinct score plus +inf with the
/// rule "score >= t means fake"; the crossing of the false-positive and
/// false-negative rates is interpolated linearly between adjacent thresholds.
double eer(const ScoreSet& s);

/// Largest true positive rate over thresholds whose false positive rate
/// (reals flagged fake) does not exceed `fdr`.
double tdr_at_fdr(const ScoreSet& s, double fdr = 0.1);

/// Fraction classified correctly with "score >= threshold means fake".
double accuracy(const ScoreSet& s, double threshold = 0.5);

struct EvalReport {
    std::string dataset;
    std::int64_t count = 0;
    std::int64_t reals = 0;
    std::int64_t fakes = 0;
    double acc = 0.0;
    double auc = 0.0;
    double eer = 0.0;
    double tdr = 0.0;  // at FDR 0.1

    std::string table() const;
    static std::string csv_header();
    std::string csv_row() const;
};

void to_json(Json& j, const EvalReport& r);

EvalReport make_report(const ScoreSet& s, const std::string& dataset);

/// sample_id,score,label
void write_scores(const std::filesystem::path& path, const ScoreSet& s);
ScoreSet read_scores(const std::filesystem::path& path);

}  // namespace cadet
