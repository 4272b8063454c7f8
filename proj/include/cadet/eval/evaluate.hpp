#pragma once

#include "cadet/data/dataset.hpp"
#include "cadet/eval/metrics.hpp"
#include "cadet/model/networks.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace cadet {

/// Rebuilds a model from the config stored in a model checkpoint and loads its
/// weights. Throws UserError if the file is missing or not a model checkpoint.
ModelBundle load_model(const std::filesystem::path& checkpoint);

/// Softmax fake probability per row, in eval mode. Ids are the manifest paths.
ScoreSet score_model(ModelBundle& model, const ImageStore& store, const std::vector<std::int64_t>& rows,
                     std::int64_t batch_size = 256);

EvalReport evaluate(ModelBundle& model, const ImageStore& store, const std::vector<std::int64_t>& rows,
                    const std::string& dataset);

/// Loads both files and evaluates `split` ("all" for every row).
EvalReport evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
                    const std::string& split = "test");

/// Rows of `split` restricted to reals plus fakes of one artifact type.
std::vector<std::int64_t> artifact_rows(const DatasetManifest& manifest, const std::string& split,
                                        std::int64_t artifact_type);

/// One report per artifact type present in `split`: all reals plus that
/// type's fakes. Reports are named "artifact_<k>".
std::vector<EvalReport> cross_artifact_reports(ModelBundle& model, const ImageStore& store, const std::string& split);

}  // namespace cadet
