// Command-line front end: basis building, latent retrieval, geodesic
// interpolation/extrapolation, motion transfer, random generation, and the
// distance/eval reporting tools. Artifacts are meshes (OBJ/PLY), JSON files
// and the .besa basis container; diagnostics are JSON on stderr.
// Exit codes: 0 success, 1 usage/input error, 2 numerical failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "besa/basis_builder.hpp"
#include "besa/container.hpp"
#include "besa/generation.hpp"
#include "besa/mesh_io.hpp"
#include "besa/serialization.hpp"

namespace fs = std::filesystem;
using namespace besa;

namespace {

// Thrown when a solver reports failure without an exception; carries the
// JSON diagnostics to print on stderr.
struct CliFailure {
  int code;
  Json diagnostics;
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io:
    case ErrorKind::parse:
    case ErrorKind::invalid:
      return 1;
    default:
      return 2;
  }
}

MetricParams parse_metric(const std::string& text) {
  std::vector<double> values;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw_error(ErrorKind::invalid,
                  "--metric expects six comma-separated numbers, got \"" +
                      text + "\"");
    }
  }
  if (values.size() != 6)
    throw_error(ErrorKind::invalid,
                "--metric expects six comma-separated numbers, got \"" + text +
                    "\"");
  MetricParams p;
  p.a0 = values[0];
  p.a1 = values[1];
  p.b1 = values[2];
  p.c1 = values[3];
  p.d1 = values[4];
  p.a2 = values[5];
  validate_params(p);
  return p;
}

std::pair<double, double> parse_range(const std::string& text,
                                      const char* flag) {
  const std::size_t colon = text.find(':');
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      const std::string head = text.substr(0, colon);
      const std::string tail = text.substr(colon + 1);
      const double from = std::stod(head, &used);
      if (used != head.size()) throw std::invalid_argument(head);
      const double to = std::stod(tail, &used);
      if (used == tail.size()) return {from, to};
    } catch (const std::exception&) {
    }
  }
  throw_error(ErrorKind::invalid, std::string(flag) +
                                      " expects FROM:TO numbers, got \"" +
                                      text + "\"");
}

// Flags shared by every solver-backed subcommand.
struct SolveFlags {
  std::string metric = "1,1000,100,1,1,1";
  std::string sigma_schedule = "0.4:0.025";
  std::string lambda_schedule = "1e2:1e8";
  int stages = 5;
  int steps = 10;
  int max_iterations = 500;
  double grad_tol = 1e-6;

  void attach(CLI::App* cmd, bool with_schedule = true) {
    cmd->add_option("--metric", metric,
                    "Metric coefficients a0,a1,b1,c1,d1,a2")
        ->capture_default_str();
    cmd->add_option("--steps", steps, "Path segment count T")
        ->capture_default_str();
    cmd->add_option("--max-iterations", max_iterations,
                    "Optimizer iteration cap per stage")
        ->capture_default_str();
    if (!with_schedule) return;
    cmd->add_option("--sigma-schedule", sigma_schedule,
                    "Varifold kernel widths FROM:TO (geometric)")
        ->capture_default_str();
    cmd->add_option("--lambda-schedule", lambda_schedule,
                    "Data-term weights FROM:TO (geometric)")
        ->capture_default_str();
    cmd->add_option("--stages", stages, "Multiresolution stage count")
        ->capture_default_str();
    cmd->add_option("--grad-tol", grad_tol,
                    "Relative gradient tolerance per stage")
        ->capture_default_str();
  }

  MetricParams params() const { return parse_metric(metric); }

  ScheduleConfig schedule() const {
    const auto [lambda_from, lambda_to] =
        parse_range(lambda_schedule, "--lambda-schedule");
    const auto [sigma_from, sigma_to] =
        parse_range(sigma_schedule, "--sigma-schedule");
    ScheduleConfig sched;
    sched.stages =
        geometric_stages(lambda_from, lambda_to, sigma_from, sigma_to, stages);
    sched.steps = steps;
    sched.max_iterations = max_iterations;
    sched.grad_tol = grad_tol;
    validate_schedule(sched);
    return sched;
  }
};

bool is_json_file(const fs::path& path) { return path.extension() == ".json"; }

std::vector<fs::path> list_mesh_files(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw_error(ErrorKind::io, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".obj" || ext == ".ply") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });
  if (files.empty())
    throw_error(ErrorKind::io,
                dir.string() + " contains no .obj or .ply files");
  return files;
}

MeshSequence load_sequence(const fs::path& dir) {
  MeshSequence seq;
  seq.id = dir.filename().string().empty() ? dir.string()
                                           : dir.filename().string();
  for (const fs::path& file : list_mesh_files(dir))
    seq.frames.push_back(load_mesh(file));
  return seq;
}

// A code argument is a {"pose","shape"} JSON whose split must match the
// basis; the pose length doubles as a consistency check.
LatentCode load_code(const fs::path& path, const Basis& basis,
                     const char* what) {
  int pose_count = 0;
  const LatentCode code = code_from_json(load_json(path), &pose_count);
  if (pose_count != basis.pose_count() || code.size() != basis.dim())
    throw_error(ErrorKind::invalid,
                std::string(what) + " " + path.string() + " has blocks " +
                    std::to_string(pose_count) + "+" +
                    std::to_string(code.size() - pose_count) +
                    " but the basis expects " +
                    std::to_string(basis.pose_count()) + "+" +
                    std::to_string(basis.shape_count()));
  return code;
}

LatentPath load_path(const fs::path& path, const Basis& basis) {
  int pose_count = 0;
  const LatentPath p = path_from_json(load_json(path), &pose_count);
  if (pose_count != basis.pose_count() ||
      p.codes.front().size() != basis.dim())
    throw_error(ErrorKind::invalid,
                "path " + path.string() + " does not match the basis blocks " +
                    std::to_string(basis.pose_count()) + "+" +
                    std::to_string(basis.shape_count()));
  return p;
}

[[noreturn]] void fail_with_report(const OptimizerReport& report,
                                   const std::string& message) {
  Json diag = error_to_json(Error(ErrorKind::numerical, message));
  diag["report"] = report_to_json(report);
  throw CliFailure{2, std::move(diag)};
}

// Retrieval used when a mesh stands in for a code argument.
LatentCode retrieve_code(const Basis& basis, const fs::path& mesh_path,
                         const SolveFlags& flags) {
  const RetrieveResult res =
      retrieve_latent(basis, load_mesh(mesh_path), flags.params(),
                      flags.schedule());
  if (!res.report.success)
    fail_with_report(res.report,
                     "latent retrieval failed for " + mesh_path.string());
  return res.code;
}

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d.obj", index);
  return buf;
}

int write_frames(const Basis& basis, const LatentPath& path,
                 const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t t = 0; t < path.codes.size(); ++t)
    save_mesh(decode(basis, path.codes[t]), dir / frame_name(static_cast<int>(t)));
  return static_cast<int>(path.codes.size());
}

void emit(const Json& j) { std::cout << j.dump(2) << "\n"; }

// ---------------------------------------------------------------------------

struct BuildBasisCmd {
  std::string template_path;
  std::vector<std::string> motion_dirs;
  std::vector<std::string> shape_dirs;
  int pose_count = 130;
  int shape_count = 40;
  bool center = false;
  std::string out = "basis.besa";

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "build-basis", "Build a pose/shape basis from mesh sequences");
    cmd->add_option("--template", template_path, "Template mesh (OBJ/PLY)")
        ->required();
    cmd->add_option("--motion", motion_dirs,
                    "Directory of motion frames (repeatable; lexicographic "
                    "frame order)")
        ->required();
    cmd->add_option("--shape", shape_dirs,
                    "Directory of shape frames (repeatable)")
        ->required();
    cmd->add_option("--pose-count", pose_count, "Pose basis size n")
        ->capture_default_str();
    cmd->add_option("--shape-count", shape_count, "Shape basis size m")
        ->capture_default_str();
    cmd->add_flag("--center", center, "Center samples before the PCA");
    cmd->add_option("--out", out, "Output container file")
        ->capture_default_str();
    cmd->callback([this] { run(); });
  }

  void run() const {
    const TriMesh tmpl = load_mesh(template_path);
    std::vector<MeshSequence> motion, shape;
    for (const std::string& dir : motion_dirs)
      motion.push_back(load_sequence(dir));
    for (const std::string& dir : shape_dirs)
      shape.push_back(load_sequence(dir));
    const auto motion_samples = motion_tangents(motion, tmpl);
    const auto shape_samples = shape_tangents(shape, tmpl);
    const Basis basis = build_basis(motion_samples, shape_samples, pose_count,
                                    shape_count, tmpl, center);
    save_basis(basis, out);
    emit(Json{{"out", out},
              {"vertices", basis.template_mesh.vertex_count()},
              {"faces", basis.template_mesh.face_count()},
              {"pose_count", basis.pose_count()},
              {"shape_count", basis.shape_count()},
              {"motion_samples", motion_samples.size()},
              {"shape_samples", shape_samples.size()}});
  }
};

struct RetrieveCmd {
  std::string basis_path;
  std::string target;
  std::string out_code = "code.json";
  std::string out_mesh = "reconstruction.obj";
  std::string out_path;
  SolveFlags flags;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "retrieve", "Find the latent code best matching a target mesh");
    cmd->add_option("--basis", basis_path, "Basis container")->required();
    cmd->add_option("--target", target, "Target mesh (OBJ/PLY)")->required();
    cmd->add_option("--out-code", out_code, "Output code JSON")
        ->capture_default_str();
    cmd->add_option("--out-mesh", out_mesh, "Output reconstructed mesh")
        ->capture_default_str();
    cmd->add_option("--out-path", out_path,
                    "Also write the full geodesic path JSON");
    flags.attach(cmd);
    cmd->callback([this] { run(); });
  }

  void run() const {
    const Basis basis = load_basis(basis_path);
    const RetrieveResult res = retrieve_latent(
        basis, load_mesh(target), flags.params(), flags.schedule());
    if (!res.report.success)
      fail_with_report(res.report, "latent retrieval failed");
    save_json(code_to_json(res.code, basis.pose_count()), out_code);
    save_mesh(res.mesh, out_mesh);
    Json summary{{"out_code", out_code},
                 {"out_mesh", out_mesh},
                 {"report", report_to_json(res.report)}};
    if (!out_path.empty()) {
      save_json(path_to_json(res.path, basis.pose_count()), out_path);
      summary["out_path"] = out_path;
    }
    emit(summary);
  }
};

struct InterpolateCmd {
  std::string basis_path;
  std::string from;
  std::string to;
  std::string mode = "geodesic";
  std::string out_dir = ".";
  std::string out_path;
  SolveFlags flags;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "interpolate", "Geodesic or linear path between two shapes");
    cmd->add_option("--basis", basis_path, "Basis container")->required();
    cmd->add_option("--from", from, "Start code JSON or mesh")->required();
    cmd->add_option("--to", to, "End code JSON or mesh")->required();
    cmd->add_option("--mode", mode, "Path model")
        ->check(CLI::IsMember({"geodesic", "linear"}))
        ->capture_default_str();
    cmd->add_option("--out-dir", out_dir, "Frame output directory")
        ->capture_default_str();
    cmd->add_option("--out-path", out_path,
                    "Path JSON (default <out-dir>/path.json)");
    flags.attach(cmd);
    cmd->callback([this] { run(); });
  }

  void run() const {
    const Basis basis = load_basis(basis_path);
    const fs::path path_file =
        out_path.empty() ? fs::path(out_dir) / "path.json" : fs::path(out_path);

    LatentPath path;
    Json summary{{"mode", mode}, {"out_dir", out_dir}};
    if (mode == "linear") {
      const LatentCode a0 = resolve(basis, from, "--from");
      const LatentCode a1 = resolve(basis, to, "--to");
      path = linear_interpolate(a0, a1, flags.steps);
    } else if (!is_json_file(from) && !is_json_file(to)) {
      // Two meshes: relax both endpoints against their varifold data terms.
      const BvpResult res =
          solve_bvp(basis, load_mesh(from), load_mesh(to), flags.params(),
                    flags.schedule());
      if (!res.report.success)
        fail_with_report(res.report, "geodesic interpolation failed");
      path = res.path;
      summary["report"] = report_to_json(res.report);
    } else {
      const LatentCode a0 = resolve(basis, from, "--from");
      const LatentCode a1 = resolve(basis, to, "--to");
      const BvpResult res = solve_bvp_codes(basis, a0, a1, flags.params(),
                                            flags.schedule());
      if (!res.report.success)
        fail_with_report(res.report, "geodesic interpolation failed");
      path = res.path;
      summary["report"] = report_to_json(res.report);
    }

    summary["frames"] = write_frames(basis, path, out_dir);
    save_json(path_to_json(path, basis.pose_count()), path_file);
    summary["out_path"] = path_file.string();
    emit(summary);
  }

  LatentCode resolve(const Basis& basis, const fs::path& arg,
                     const char* what) const {
    if (is_json_file(arg)) return load_code(arg, basis, what);
    return retrieve_code(basis, arg, flags);
  }
};

struct ExtrapolateCmd {
  std::string basis_path;
  std::string code_path;
  std::string velocity_path;
  std::string out_dir = ".";
  std::string out_path;
  SolveFlags flags;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "extrapolate", "Shoot a geodesic from a code and an initial velocity");
    cmd->add_option("--basis", basis_path, "Basis container")->required();
    cmd->add_option("--code", code_path, "Start code JSON")->required();
    cmd->add_option("--velocity", velocity_path, "Initial velocity JSON")
        ->required();
    cmd->add_option("--out-dir", out_dir, "Frame output directory")
        ->capture_default_str();
    cmd->add_option("--out-path", out_path,
                    "Path JSON (default <out-dir>/path.json)");
    flags.attach(cmd, /*with_schedule=*/false);
    cmd->callback([this] { run(); });
  }

  void run() const {
    const Basis basis = load_basis(basis_path);
    const LatentCode alpha0 = load_code(code_path, basis, "--code");
    const LatentCode beta = load_code(velocity_path, basis, "--velocity");
    const IvpResult res = solve_ivp(basis, alpha0, beta, flags.steps,
                                    flags.params(), flags.max_iterations);
    if (!res.success) {
      Json diag = error_to_json(
          Error(ErrorKind::numerical, "geodesic shooting failed at step " +
                                          std::to_string(res.failed_step)));
      diag["failed_step"] = res.failed_step;
      diag["residuals"] = res.residuals;
      throw CliFailure{2, std::move(diag)};
    }
    const fs::path path_file =
        out_path.empty() ? fs::path(out_dir) / "path.json" : fs::path(out_path);
    const int frames = write_frames(basis, res.path, out_dir);
    save_json(path_to_json(res.path, basis.pose_count()), path_file);
    emit(Json{{"frames", frames},
              {"out_dir", out_dir},
              {"out_path", path_file.string()},
              {"residuals", res.residuals}});
  }
};

struct TransferCmd {
  std::string basis_path;
  std::string path_file;
  std::string target;
  std::string out_path = "transferred.json";
  std::string out_dir = ".";
  SolveFlags flags;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "transfer", "Re-target a motion path onto another shape");
    cmd->add_option("--basis", basis_path, "Basis container")->required();
    cmd->add_option("--path", path_file, "Motion path JSON")->required();
    cmd->add_option("--target", target,
                    "Shape donor: code JSON or mesh to retrieve")
        ->required();
    cmd->add_option("--out-path", out_path, "Output path JSON")
        ->capture_default_str();
    cmd->add_option("--out-dir", out_dir, "Frame output directory")
        ->capture_default_str();
    flags.attach(cmd);
    cmd->callback([this] { run(); });
  }

  void run() const {
    const Basis basis = load_basis(basis_path);
    const LatentPath path = load_path(path_file, basis);
    const LatentCode donor = is_json_file(target)
                                 ? load_code(target, basis, "--target")
                                 : retrieve_code(basis, target, flags);
    const LatentPath out =
        transfer_motion(path, donor.tail(basis.shape_count()));
    save_json(path_to_json(out, basis.pose_count()), out_path);
    const int frames = write_frames(basis, out, out_dir);
    emit(Json{{"out_path", out_path},
              {"out_dir", out_dir},
              {"frames", frames}});
  }
};

struct GenerateCmd {
  std::string basis_path;
  std::string gmm_pose_path;
  std::string gmm_shape_path;
  std::vector<std::string> fit_paths;
  int pose_components = kDefaultPoseComponents;
  int shape_components = kDefaultShapeComponents;
  std::uint64_t fit_seed = 0;
  std::string out_gmm_pose;
  std::string out_gmm_shape;
  std::uint64_t seed = 0;
  std::string out = "generated.obj";
  SolveFlags flags;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "generate", "Sample a random shape from velocity mixtures");
    cmd->add_option("--basis", basis_path, "Basis container")->required();
    cmd->add_option("--gmm-pose", gmm_pose_path, "Pose mixture JSON");
    cmd->add_option("--gmm-shape", gmm_shape_path, "Shape mixture JSON");
    cmd->add_option("--fit-paths", fit_paths,
                    "Fit the mixtures from these path JSONs instead");
    cmd->add_option("--pose-components", pose_components,
                    "Mixture size for the pose block when fitting")
        ->capture_default_str();
    cmd->add_option("--shape-components", shape_components,
                    "Mixture size for the shape block when fitting")
        ->capture_default_str();
    cmd->add_option("--fit-seed", fit_seed, "Seed for the mixture fits")
        ->capture_default_str();
    cmd->add_option("--out-gmm-pose", out_gmm_pose,
                    "Write the fitted pose mixture JSON");
    cmd->add_option("--out-gmm-shape", out_gmm_shape,
                    "Write the fitted shape mixture JSON");
    cmd->add_option("--seed", seed, "Sampling seed")->capture_default_str();
    cmd->add_option("--out", out, "Output mesh")->capture_default_str();
    flags.attach(cmd, /*with_schedule=*/false);
    cmd->callback([this] { run(); });
  }

  void run() const {
    const Basis basis = load_basis(basis_path);
    const bool have_models =
        !gmm_pose_path.empty() && !gmm_shape_path.empty();
    if (have_models == !fit_paths.empty())
      throw_error(ErrorKind::invalid,
                  "give either --gmm-pose and --gmm-shape, or --fit-paths");
    if (gmm_pose_path.empty() != gmm_shape_path.empty())
      throw_error(ErrorKind::invalid,
                  "--gmm-pose and --gmm-shape go together");

    GMMModel pose, shape;
    if (have_models) {
      pose = gmm_from_json(load_json(gmm_pose_path));
      shape = gmm_from_json(load_json(gmm_shape_path));
    } else {
      std::vector<Eigen::VectorXd> pose_samples, shape_samples;
      for (const std::string& file : fit_paths) {
        const LatentCode v = initial_velocity(load_path(file, basis));
        pose_samples.push_back(v.head(basis.pose_count()));
        shape_samples.push_back(v.tail(basis.shape_count()));
      }
      pose = fit_gmm(pose_samples, pose_components, fit_seed);
      shape = fit_gmm(shape_samples, shape_components, fit_seed);
      if (!out_gmm_pose.empty()) save_json(gmm_to_json(pose), out_gmm_pose);
      if (!out_gmm_shape.empty())
        save_json(gmm_to_json(shape), out_gmm_shape);
    }

    LatentCode drawn;
    const TriMesh mesh =
        sample_shape(basis, pose, shape, flags.steps, flags.params(), seed,
                     flags.max_iterations, &drawn);
    save_mesh(mesh, out);
    emit(Json{{"out", out},
              {"seed", seed},
              {"velocity", code_to_json(drawn, basis.pose_count())}});
  }
};

struct DistanceCmd {
  std::string mesh_a;
  std::string mesh_b;
  double sigma = 0.4;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "distance", "All applicable similarity metrics between two meshes");
    cmd->add_option("mesh_a", mesh_a, "First mesh")->required();
    cmd->add_option("mesh_b", mesh_b, "Second mesh")->required();
    cmd->add_option("--sigma", sigma, "Varifold kernel width")
        ->capture_default_str();
    cmd->callback([this] { run(); });
  }

  void run() const {
    const EvalRecord record = eval_reconstruction(
        {load_mesh(mesh_a)}, {load_mesh(mesh_b)}, VarifoldConfig{sigma});
    const EvalCase& c = record.cases.front();
    Json j{{"hausdorff", c.hausdorff},
           {"chamfer", c.chamfer},
           {"varifold_sq", c.varifold_sq}};
    if (c.mse) j["mse"] = *c.mse;
    emit(j);
  }
};

struct EvalCmd {
  std::string outputs_dir;
  std::string truth_dir;
  double sigma = 0.4;
  std::string out;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "eval", "Score a directory of outputs against ground truth");
    cmd->add_option("--outputs", outputs_dir, "Directory of output meshes")
        ->required();
    cmd->add_option("--truth", truth_dir,
                    "Directory of ground-truth meshes (paired by sorted "
                    "file name)")
        ->required();
    cmd->add_option("--sigma", sigma, "Varifold kernel width")
        ->capture_default_str();
    cmd->add_option("--out", out, "Also write the record to this JSON file");
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto output_files = list_mesh_files(outputs_dir);
    const auto truth_files = list_mesh_files(truth_dir);
    if (output_files.size() != truth_files.size())
      throw_error(ErrorKind::invalid,
                  "--outputs has " + std::to_string(output_files.size()) +
                      " meshes but --truth has " +
                      std::to_string(truth_files.size()));
    std::vector<TriMesh> outputs, truths;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < output_files.size(); ++i) {
      outputs.push_back(load_mesh(output_files[i]));
      truths.push_back(load_mesh(truth_files[i]));
      names.push_back(output_files[i].filename().string());
    }
    const EvalRecord record =
        eval_reconstruction(outputs, truths, VarifoldConfig{sigma}, names);
    const Json j = eval_to_json(record);
    if (!out.empty()) save_json(j, out);
    emit(j);
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Basis-restricted elastic shape analysis"};
  app.require_subcommand(1);

  BuildBasisCmd build_basis_cmd;
  RetrieveCmd retrieve_cmd;
  InterpolateCmd interpolate_cmd;
  ExtrapolateCmd extrapolate_cmd;
  TransferCmd transfer_cmd;
  GenerateCmd generate_cmd;
  DistanceCmd distance_cmd;
  EvalCmd eval_cmd;
  build_basis_cmd.attach(app);
  retrieve_cmd.attach(app);
  interpolate_cmd.attach(app);
  extrapolate_cmd.attach(app);
  transfer_cmd.attach(app);
  generate_cmd.attach(app);
  distance_cmd.attach(app);
  eval_cmd.attach(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CliFailure& failure) {
    std::cerr << failure.diagnostics.dump(2) << "\n";
    return failure.code;
  } catch (const Error& e) {
    std::cerr << error_to_json(e).dump(2) << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", Json{{"kind", "internal"},
                                     {"message", e.what()}}}}
                     .dump(2)
              << "\n";
    return 2;
  }
}
