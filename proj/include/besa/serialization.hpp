#pragma once

// JSON encodings of the CLI-facing value types: latent codes, velocities and
// paths (pose/shape blocks kept separate so files are self-describing),
// mixture models, optimizer reports, evaluation records, and the error
// envelope printed on failure.

#include <filesystem>

#include <json.hpp>

#include <besa/eval.hpp>
#include <besa/generation.hpp>
#include <besa/optimizer.hpp>

namespace besa {

using Json = nlohmann::json;

const char* error_kind_name(ErrorKind kind);

// {"pose": [...], "shape": [...]}
Json code_to_json(const LatentCode& code, int pose_count);
// Returns the concatenated code; *pose_count (when non-null) receives the
// pose block length.
LatentCode code_from_json(const Json& j, int* pose_count = nullptr);

// {"codes": [code objects]}
Json path_to_json(const LatentPath& path, int pose_count);
LatentPath path_from_json(const Json& j, int* pose_count = nullptr);

// {"weights": [...], "means": [[...]], "covariances": [row-major d*d]}
Json gmm_to_json(const GMMModel& model);
GMMModel gmm_from_json(const Json& j);

Json report_to_json(const OptimizerReport& report);

Json eval_to_json(const EvalRecord& record);

// {"error": {"kind": ..., "message": ...}}
Json error_to_json(const Error& error);

// File helpers; parse failures name the file.
Json load_json(const std::filesystem::path& path);
void save_json(const Json& j, const std::filesystem::path& path);

}  // namespace besa
