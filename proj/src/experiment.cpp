#include "lgap/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "lgap/analytic.hpp"
#include "lgap/exact.hpp"

namespace lgap {

namespace {

using Json = nlohmann::ordered_json;

std::string hex_u64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "0x%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << text;
}

void write_manifest(const std::filesystem::path& dir,
                    const ExperimentConfig& cfg, RunMode mode) {
  Json manifest;
  manifest["mode"] = to_string(mode);
  manifest["config_hash"] = hex_u64(config_hash(cfg));
  if (cfg.sampler.seed) {
    manifest["seed"] = *cfg.sampler.seed;
  } else {
    manifest["seed"] = nullptr;
  }
  manifest["versions"] = {
      {"lgap", kVersion},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
#if defined(__clang__)
      {"compiler", "clang " __clang_version__},
#elif defined(__GNUC__)
      {"compiler", "gcc " __VERSION__},
#else
      {"compiler", "unknown"},
#endif
  };
  manifest["config"] = serialize_config(cfg);
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string ancillary_descriptor(const AncillaryState& anc) {
  if (anc.kind == AncillaryState::Kind::Identity) return "identity";
  std::string s = "product:";
  for (std::int8_t v : anc.config.spins) {
    s += v == +1 ? '+' : '-';
  }
  return s;
}

AncillaryState ancillary_from_descriptor(const std::string& desc) {
  if (desc == "identity") return AncillaryState::identity();
  const std::string prefix = "product:";
  if (desc.rfind(prefix, 0) != 0) {
    throw ModelError("bad ancillary descriptor '" + desc + "'");
  }
  BiBaseConfig cfg;
  for (char c : desc.substr(prefix.size())) {
    if (c == '+') {
      cfg.spins.push_back(+1);
    } else if (c == '-') {
      cfg.spins.push_back(-1);
    } else {
      throw ModelError("bad ancillary descriptor '" + desc + "'");
    }
  }
  return AncillaryState::product(std::move(cfg));
}

AncillaryState make_ancillary(const RbmBlock& block, int sites) {
  if (block.ancillary == AncillaryKind::Identity) {
    return AncillaryState::identity();
  }
  return AncillaryState::all_down(sites);
}

struct RbmRunOutput {
  RunResult result;
  GapEstimate gap;
  double wall_seconds = 0.0;
};

RbmRunOutput execute_rbm(const ExperimentConfig& cfg,
                         const std::filesystem::path& dir,
                         std::vector<std::string>& warnings) {
  const LindbladModel model = model_from_config(cfg.model);
  const VectorizedLiouvillian liouv = vectorize(model);
  const int sites = model.lattice.sites;
  const int hidden = cfg.rbm.hidden_count(sites);

  Rng init_rng = make_rng(*cfg.sampler.seed, kInitStream);
  TrialState trial;
  trial.rbm = init_parameters(sites, hidden, cfg.rbm.init_scale, init_rng);
  trial.ancillary = make_ancillary(cfg.rbm, sites);

  ChainConfig chain_cfg;
  chain_cfg.samples = cfg.sampler.samples;
  chain_cfg.burn_in = cfg.sampler.burn_in;
  chain_cfg.chains = cfg.sampler.chains;
  chain_cfg.seed = *cfg.sampler.seed;
  chain_cfg.exact_summation = cfg.sampler.exact_summation;
  chain_cfg.ok_variant = cfg.rbm.ok_variant;

  OptimizerConfig opt_cfg;
  opt_cfg.max_iters = cfg.optimizer.max_iters;
  opt_cfg.beta = cfg.optimizer.beta;
  opt_cfg.two_phase = cfg.optimizer.two_phase;
  opt_cfg.window = cfg.optimizer.window;
  opt_cfg.tolerance = cfg.optimizer.tolerance;
  opt_cfg.trace_samples = cfg.sampler.trace_samples;
  opt_cfg.exhaustive_trace = cfg.sampler.exhaustive_trace_for(sites);
  opt_cfg.ok_variant = cfg.rbm.ok_variant;

  std::ofstream trace_file(dir / "trace.dat", std::ios::binary);
  trace_file << "# step re_liouville im_liouville acceptance discard "
                "step_norm\n";
  auto on_iteration = [&trace_file](const IterationRecord& rec) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d %.12e %.12e %.6f %.6f %.12e\n",
                  rec.step, rec.re_liouville, rec.im_liouville,
                  rec.acceptance, rec.discard_rate, rec.step_norm);
    trace_file << buf;
    trace_file.flush();
  };

  const auto t0 = std::chrono::steady_clock::now();
  RbmRunOutput out;
  out.result = run(std::move(trial), liouv, chain_cfg, opt_cfg, on_iteration);
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  out.gap = gap_estimate(out.result.trace, opt_cfg.window);
  warnings.insert(warnings.end(), out.result.trace.warnings.begin(),
                  out.result.trace.warnings.end());

  save_checkpoint((dir / "checkpoint.dat").string(), out.result.trial.rbm,
                  out.result.trial.ancillary,
                  static_cast<int>(out.result.trace.records.size()));
  return out;
}

Json gap_json(const GapEstimate& gap) {
  return Json{{"gap", gap.gap},
              {"std_error", gap.std_error},
              {"flagged_near_zero", gap.flagged_near_zero}};
}

void run_rbm_mode(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                  std::vector<std::string> warnings) {
  Json summary;
  summary["mode"] = "rbm";
  try {
    RbmRunOutput out = execute_rbm(cfg, dir, warnings);
    summary["status"] = "ok";
    summary["gap_estimate"] = gap_json(out.gap);
    summary["iterations"] = out.result.trace.records.size();
    summary["converged"] = out.result.converged;
    summary["wall_seconds"] = out.wall_seconds;
    summary["warnings"] = warnings;
    write_text(dir / "summary.json", summary.dump(2) + "\n");
  } catch (const RunError& e) {
    summary["status"] = "error";
    summary["error"] = e.what();
    summary["iterations"] = e.partial.records.size();
    summary["warnings"] = warnings;
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    throw;
  }
}

void run_ed_mode(const ExperimentConfig& cfg,
                 const std::filesystem::path& dir) {
  const LindbladModel model = model_from_config(cfg.model);
  const SpectrumResult spec = full_spectrum(dense_liouvillian(model));
  const DecayCase decay = classify_decay_modes(spec);

  std::ofstream csv(dir / "spectrum.csv", std::ios::binary);
  csv << "re,im,degeneracy\n";
  for (const auto& [re, im, deg] : spectrum_export(spec)) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.12e,%.12e,%d\n", re, im, deg);
    csv << buf;
  }

  Json summary;
  summary["mode"] = "ed";
  summary["status"] = "ok";
  summary["gap"] = spec.gap;
  summary["first_decay_modes"] = spec.first_decay_indices.size();
  switch (decay) {
    case DecayCase::Single:
      summary["decay_case"] = "single";
      break;
    case DecayCase::DegenerateOrthogonal:
      summary["decay_case"] = "degenerate-orthogonal";
      break;
    case DecayCase::DegenerateNonOrthogonal:
      summary["decay_case"] = "degenerate-nonorthogonal";
      break;
  }
  write_text(dir / "summary.json", summary.dump(2) + "\n");
}

void run_bethe_mode(const ExperimentConfig& cfg,
                    const std::filesystem::path& dir) {
  if (cfg.model.geometry != Geometry::Chain ||
      cfg.model.effective_boundary() != Boundary::Periodic) {
    throw ConfigError("bethe mode needs a periodic chain");
  }
  if (cfg.model.jx != cfg.model.jy) {
    throw ConfigError("bethe mode needs the isotropic model (jx == jy)");
  }
  const int n = cfg.model.n;
  // One copy of the doubled-lattice operator hops at (jx + jy)/4, i.e.
  // half the model exchange in the quantization formulas.
  const double j = 0.5 * cfg.model.jx;
  const double jz = cfg.model.jz;
  const double gamma = cfg.model.gamma;

  std::ofstream csv(dir / "bethe.csv", std::ios::binary);
  csv << "m,re_k1,im_k1,re_k2,im_k2,re_e,im_e,re_e_hr,im_e_hr,residual\n";
  auto emit = [&csv](int m, Complex k1, Complex k2, Complex e, Complex ehr,
                     double residual) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%d,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.3e\n",
                  m, k1.real(), k1.imag(), k2.real(), k2.imag(), e.real(),
                  e.imag(), ehr.real(), ehr.imag(), residual);
    csv << buf;
  };

  for (double k : solve_bethe_m1(n)) {
    const Complex roots[1] = {Complex(k, 0.0)};
    emit(1, roots[0], Complex(0.0, 0.0),
         bethe_energy(roots, j, jz, gamma, BetheBranch::Right),
         bethe_energy_h_right(roots, n, j, jz, gamma), 0.0);
  }
  Json summary;
  summary["mode"] = "bethe";
  summary["status"] = "ok";
  summary["m1_count"] = n;
  if (n >= 3) {
    const BetheM2Result m2 = solve_bethe_m2(n, j, jz);
    for (const BetheSolution& sol : m2.solutions) {
      const Complex roots[2] = {sol.roots[0], sol.roots[1]};
      emit(2, sol.roots[0], sol.roots[1],
           bethe_energy(roots, j, jz, gamma, BetheBranch::Right),
           bethe_energy_h_right(roots, n, j, jz, gamma), sol.residual);
    }
    summary["m2_count"] = m2.solutions.size();
    summary["m2_expected"] = m2.expected;
    summary["m2_complete"] = m2.complete;
    if (!m2.complete) {
      summary["m2_missing"] =
          m2.expected - static_cast<int>(m2.solutions.size());
    }
  }
  write_text(dir / "summary.json", summary.dump(2) + "\n");
}

void run_meanfield_mode(const ExperimentConfig& cfg,
                        const std::filesystem::path& dir) {
  const MeanFieldResult mf = meanfield_steady_state(
      cfg.model.jx, cfg.model.jy, cfg.model.jz, cfg.model.gamma);
  double flow[3];
  meanfield_flow(cfg.model.jx, cfg.model.jy, cfg.model.jz, cfg.model.gamma,
                 mf, flow);
  Json summary;
  summary["mode"] = "meanfield";
  summary["status"] = "ok";
  summary["sx"] = mf.sx;
  summary["sy"] = mf.sy;
  summary["sz"] = mf.sz;
  summary["phase"] = mf.phase == MeanFieldPhase::Degenerate ? "degenerate"
                                                            : "unique-gapped";
  summary["discriminant"] = mf.discriminant;
  summary["fixed_point_residual"] =
      std::max({std::abs(flow[0]), std::abs(flow[1]), std::abs(flow[2])});
  write_text(dir / "summary.json", summary.dump(2) + "\n");
}

void run_compare_mode(const ExperimentConfig& cfg,
                      const std::filesystem::path& dir,
                      std::vector<std::string> warnings) {
  Json summary;
  summary["mode"] = "compare";
  try {
    RbmRunOutput out = execute_rbm(cfg, dir, warnings);

    double exact_gap = 0.0;
    std::string oracle;
    if (cfg.model.jx == cfg.model.jy) {
      exact_gap = xxz_gap(cfg.model.gamma);
      oracle = "analytic";
    } else {
      const LindbladModel model = model_from_config(cfg.model);
      exact_gap = full_spectrum(dense_liouvillian(model)).gap;
      oracle = "ed";
    }
    const double rel_err =
        std::abs((out.gap.gap - exact_gap) / exact_gap);

    summary["status"] = "ok";
    summary["gap_estimate"] = gap_json(out.gap);
    summary["oracle"] = oracle;
    summary["exact_gap"] = exact_gap;
    summary["relative_error"] = rel_err;
    summary["iterations"] = out.result.trace.records.size();
    summary["converged"] = out.result.converged;
    summary["wall_seconds"] = out.wall_seconds;
    summary["warnings"] = warnings;
    write_text(dir / "summary.json", summary.dump(2) + "\n");
  } catch (const RunError& e) {
    summary["status"] = "error";
    summary["error"] = e.what();
    summary["warnings"] = warnings;
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    throw;
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const RbmParameters& rbm,
                     const AncillaryState& ancillary, int iteration) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  const Eigen::VectorXd flat = rbm.flatten();
  out << "lgap-checkpoint 1\n";
  out << "n " << rbm.n << "\n";
  out << "m " << rbm.m << "\n";
  out << "ancillary " << ancillary_descriptor(ancillary) << "\n";
  out << "iteration " << iteration << "\n";
  out << "params " << flat.size() << "\n";
  char buf[48];
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%a\n", flat(i));
    out << buf;
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + path);
  }
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "lgap-checkpoint" || version != 1) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  std::string key, anc_desc;
  int n = 0, m = 0, iteration = 0;
  Eigen::Index count = 0;
  in >> key >> n;
  in >> key >> m;
  in >> key >> anc_desc;
  in >> key >> iteration;
  in >> key >> count;
  Eigen::VectorXd flat(count);
  std::string token;
  for (Eigen::Index i = 0; i < count; ++i) {
    in >> token;
    flat(i) = std::strtod(token.c_str(), nullptr);
  }
  if (!in) {
    throw std::runtime_error("truncated checkpoint: " + path);
  }
  Checkpoint ck;
  ck.rbm = RbmParameters::unflatten(n, m, flat);
  ck.ancillary = ancillary_from_descriptor(anc_desc);
  ck.iteration = iteration;
  return ck;
}

LindbladModel model_from_config(const ModelBlock& block) {
  Lattice lattice;
  const bool periodic = block.effective_boundary() == Boundary::Periodic;
  if (block.geometry == Geometry::Chain) {
    lattice = build_chain(block.n, periodic);
  } else {
    lattice = build_square(block.lx, block.ly, periodic);
  }
  return build_xyz_model(lattice, block.jx, block.jy, block.jz, block.gamma);
}

void run_experiment(const ExperimentConfig& cfg, RunMode mode) {
  std::vector<std::string> warnings = validate_config(cfg, mode);
  const std::filesystem::path dir(cfg.output.dir);
  std::filesystem::create_directories(dir);
  write_manifest(dir, cfg, mode);

  switch (mode) {
    case RunMode::Rbm:
      run_rbm_mode(cfg, dir, std::move(warnings));
      break;
    case RunMode::Ed:
      run_ed_mode(cfg, dir);
      break;
    case RunMode::Bethe:
      run_bethe_mode(cfg, dir);
      break;
    case RunMode::MeanField:
      run_meanfield_mode(cfg, dir);
      break;
    case RunMode::Compare:
      run_compare_mode(cfg, dir, std::move(warnings));
      break;
  }
}

}  // namespace lgap
