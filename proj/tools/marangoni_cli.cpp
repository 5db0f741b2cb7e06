// Command-line front end. Every subcommand reads one self-describing json
// config, writes flat tables plus a json report stamped with the config
// digest, and exits 0 on success, 2 on precondition failures, 3 on numerical
// failures.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "marangoni/control.hpp"
#include "marangoni/errors.hpp"
#include "marangoni/galerkin.hpp"
#include "marangoni/io.hpp"
#include "marangoni/pdesim.hpp"
#include "marangoni/profile.hpp"
#include "marangoni/quadratic.hpp"
#include "marangoni/spectral.hpp"

namespace {

using namespace marangoni;

struct Common {
  std::string config;
  std::string out = ".";
  long seed = -1;  // -1 keeps module defaults
  int threads = 1;
};

int classify(ErrorCode c) {
  switch (c) {
    case ErrorCode::PreconditionError:
    case ErrorCode::SupportViolation:
    case ErrorCode::MeanViolation:
    case ErrorCode::MismatchedBases:
    case ErrorCode::RankDeficient:
    case ErrorCode::DegeneratePairing:
    case ErrorCode::DecompositionFailed:
    case ErrorCode::PivotUnderflow:
      return 2;
    default:
      return 3;
  }
}

Json load_config(const Common& cm) {
  Json j = Json::parse(read_text_file(cm.config));
  std::filesystem::create_directories(cm.out);
  return j;
}

std::string out_path(const Common& cm, const std::string& name) {
  return (std::filesystem::path(cm.out) / name).string();
}

TuneMode tune_mode_of(const std::string& s) {
  if (s == "limit") return TuneMode::Limit;
  if (s == "finite") return TuneMode::Finite;
  fail(ErrorCode::PreconditionError, "mode must be 'limit' or 'finite', got '" + s + "'");
}

// Tuned profile from the config block: explicit (mu, d) are honored, anything
// missing is resolved by tune_d in finite mode. Tuning facts land in rep.
HeatProfile tuned_profile(const Json& jp, Json& rep) {
  ProfileParams p = profile_from_json(jp);
  if ((int)p.d.size() == p.N && p.mu > 0.0) {
    rep["tuned_here"] = false;
    return HeatProfile(p);
  }
  TuneResult tr = tune_d(p, TuneMode::Finite, p.mu);
  rep["tuned_here"] = true;
  rep["mu"] = tr.mu;
  rep["d"] = tr.d;
  rep["tune_residual"] = tr.resid_norm;
  return tr.profile;
}

template <class F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), "stage " + name + " failed: " + e.what());
  }
}

ControlTarget control_target_from(const Json& j, int N) {
  ControlTarget t;
  t.Tpp = j.contains("Tpp") ? mat_from_json(j.at("Tpp")) : Mat::Zero(N, N);
  t.Tmm = j.contains("Tmm") ? mat_from_json(j.at("Tmm")) : Mat::Zero(N, N);
  t.Tpm = j.contains("Tpm") ? mat_from_json(j.at("Tpm")) : Mat::Zero(N, N);
  t.Tmp = j.contains("Tmp") ? mat_from_json(j.at("Tmp")) : Mat::Zero(N, N);
  t.fplus = j.contains("fplus") ? vec_from_json(j.at("fplus")) : Vec::Zero(N);
  t.fminus = j.contains("fminus") ? vec_from_json(j.at("fminus")) : Vec::Zero(N);
  return t;
}

Json tensor3_json(const Tensor3& t) { return Json{{"n", t.n}, {"a", t.a}}; }

QuadraticSystem permute_system(const QuadraticSystem& q, const std::vector<int>& perm) {
  const int n = q.N;
  QuadraticSystem out;
  out.N = n;
  out.K = Tensor3R(n, n, n);
  out.M = Mat::Zero(n, n);
  out.g = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    out.g(i) = q.g(perm[i]);
    for (int j = 0; j < n; ++j) {
      out.M(i, j) = q.M(perm[i], perm[j]);
      for (int l = 0; l < n; ++l) out.K.at(i, j, l) = q.K.at(perm[i], perm[j], perm[l]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_spectrum(const Common& cm) {
  Json cfg = load_config(cm);
  Json rep;
  rep["digest"] = config_digest(cfg);
  HeatProfile prof = tuned_profile(cfg.at("profile"), rep);
  const int kmax = cfg.value("kmax", 12);
  const std::string mode = cfg.value("mode", "limit");
  const Json box = cfg.value("box", Json::object());
  const Complex lo(box.value("re_lo", -2.0), -box.value("im", 5.0));
  const Complex hi(box.value("re_hi", 0.25), box.value("im", 5.0));
  RootScanOptions opt;
  if (cm.seed >= 0) opt.seed = (unsigned)cm.seed;
  ResidualMode rm = (mode == "finite") ? ResidualMode::Finite : ResidualMode::Limit;
  SpectrumReport sr =
      scan_spectrum(prof, kmax, rm, lo, hi, cfg.value("tol_zero", 1e-6), opt);

  Table tab({"k", "re_lambda", "im_lambda", "residual"});
  for (const auto& kv : sr.per_k)
    for (const auto& r : kv.second)
      tab.add({(double)kv.first, r.lambda.real(), r.lambda.imag(), r.residual});
  write_text_file(out_path(cm, "spectrum.tsv"), tab.tsv());
  rep["gap"] = sr.gap;
  rep["zero_modes"] = sr.zero_modes;
  rep["kmax"] = kmax;
  rep["mode"] = mode;
  write_text_file(out_path(cm, "spectrum_report.json"), rep.dump(2) + "\n");
  std::cout << "gap " << format_g17(sr.gap) << ", zero modes " << sr.zero_modes.size()
            << ", report " << out_path(cm, "spectrum_report.json") << "\n";
  return 0;
}

int cmd_tune(const Common& cm) {
  Json cfg = load_config(cm);
  Json rep;
  rep["digest"] = config_digest(cfg);
  ProfileParams p = profile_from_json(cfg.at("profile"));
  TuneMode mode = tune_mode_of(cfg.value("mode", "finite"));
  TuneResult tr = tune_d(p, mode, p.mu);
  rep["mu"] = tr.mu;
  rep["d"] = tr.d;
  rep["resid_norm"] = tr.resid_norm;
  rep["iters"] = tr.iters;
  rep["separation"] = tr.separation;
  write_text_file(out_path(cm, "tune_report.json"), rep.dump(2) + "\n");
  std::cout << "mu " << format_g17(tr.mu) << ", |residual| " << format_g17(tr.resid_norm)
            << ", report " << out_path(cm, "tune_report.json") << "\n";
  return 0;
}

int cmd_coeffs(const Common& cm) {
  Json cfg = load_config(cm);
  Json rep;
  rep["digest"] = config_digest(cfg);
  HeatProfile prof = tuned_profile(cfg.at("profile"), rep);
  const int N = prof.params().N;
  auto pairs = biorthogonalize(prof, N);
  TrigField u1, eta1;
  if (cfg.contains("u1")) u1 = source_from_json(cfg.at("u1")).to_field();
  if (cfg.contains("eta1")) eta1 = source_from_json(cfg.at("eta1")).to_field();
  ReducedSystem rs = assemble_reduced(prof, pairs, u1, eta1, cfg.value("gamma", 1e-3));
  Mat gram = gram_matrix(pairs, prof.params().h, prof.grid());
  const double dev = (gram - Mat::Identity(2 * N + 1, 2 * N + 1)).cwiseAbs().maxCoeff();
  rep["ks"] = rs.ks;
  rep["Gppp"] = tensor3_json(rs.Gppp);
  rep["Gmmp"] = tensor3_json(rs.Gmmp);
  rep["Gpmm"] = tensor3_json(rs.Gpmm);
  rep["M"] = mat_json(rs.M);
  rep["f"] = vec_json(rs.f);
  rep["gamma"] = rs.gamma;
  rep["gram_max_dev"] = dev;
  write_text_file(out_path(cm, "coeffs.json"), rep.dump(2) + "\n");
  std::cout << "modes " << N << ", gram deviation " << format_g17(dev) << ", report "
            << out_path(cm, "coeffs.json") << "\n";
  return 0;
}

int cmd_control(const Common& cm) {
  Json cfg = load_config(cm);
  Json rep;
  rep["digest"] = config_digest(cfg);
  HeatProfile prof = tuned_profile(cfg.at("profile"), rep);
  const int N = prof.params().N;
  auto pairs = biorthogonalize(prof, N);
  ControlTarget ct = control_target_from(cfg.at("target"), N);
  const int basis = cfg.value("basis_size", 24);
  HeatSource2D u1 = solve_control(ct, pairs, prof, basis);
  HeatSource2D eta1 = solve_forcing(ct.fplus, ct.fminus, pairs, prof, basis,
                                    cfg.value("delta0", -1.0));

  ReducedSystem rs = assemble_reduced(prof, pairs, u1.to_field(), eta1.to_field(), 1.0);
  Mat Mt(2 * N, 2 * N);
  Mt.topLeftCorner(N, N) = ct.Tpp;
  Mt.topRightCorner(N, N) = ct.Tpm;
  Mt.bottomLeftCorner(N, N) = ct.Tmp;
  Mt.bottomRightCorner(N, N) = ct.Tmm;
  Vec ft(2 * N);
  ft.head(N) = ct.fplus;
  ft.tail(N) = ct.fminus;
  const double scaleM = 1.0 + Mt.cwiseAbs().maxCoeff();
  const double scalef = 1.0 + ft.cwiseAbs().maxCoeff();
  const double errM = (rs.M - Mt).cwiseAbs().maxCoeff() / scaleM;
  const double errf = (rs.f - ft).cwiseAbs().maxCoeff() / scalef;
  rep["u1"] = source_json(u1);
  rep["eta1"] = source_json(eta1);
  rep["roundtrip_rel_M"] = errM;
  rep["roundtrip_rel_f"] = errf;
  write_text_file(out_path(cm, "control_report.json"), rep.dump(2) + "\n");
  std::cout << "roundtrip M " << format_g17(errM) << ", f " << format_g17(errf) << ", report "
            << out_path(cm, "control_report.json") << "\n";
  const double tol = cfg.value("tol_ctrl", 1e-6);
  if (errM > tol || errf > tol)
    fail(ErrorCode::NonConvergence, "forward map misses the target beyond tol_ctrl");
  return 0;
}

int cmd_realize(const Common& cm) {
  Json cfg = load_config(cm);
  Json rep;
  rep["digest"] = config_digest(cfg);
  const double xi = cfg.value("xi", 1e-2);
  const double gamma = cfg.value("gamma", 1e-3);
  const int basis = cfg.value("basis_size", 16);

  HeatProfile prof = stage("tune", [&] { return tuned_profile(cfg.at("profile"), rep); });
  const int N = prof.params().N;
  auto pairs = stage("biorthogonalize", [&] { return biorthogonalize(prof, N); });
  ReducedSystem base = stage("galerkin", [&] {
    return assemble_reduced(prof, pairs, TrigField{}, TrigField{}, gamma);
  });
  const QuadraticSystem amb = to_quadratic(base);

  const int p = cfg.value("p", 1);
  SidonSet sid = stage("sidon", [&] { return sidon_set(p); });
  rep["sidon"] = sid.ks;
  PDecomposition dec = stage("p_decomposition", [&] {
    return check_p_decomposition(base.Gppp, base.ks, sid);
  });
  require(dec.solvable, ErrorCode::PivotUnderflow, "stage p_decomposition: not solvable");
  Json piv = Json::array();
  for (const auto& [i, j, v] : dec.pivots) piv.push_back(Json{{"i", i}, {"j", j}, {"pivot", v}});
  rep["pivots"] = piv;

  // Ambient reordering: sidon plus-coordinates first, then the sum-wavenumber
  // plus-coordinates (padded to p^2 fast slots so the realizer window
  // N'/2 < p^2+p <= N' holds on the leading sub-block), then everything else.
  // The coordinates outside the sub-block are damped at rate xi^-1 and feed the
  // slow rows only through quadratic mixing, an O(xi) correction.
  auto plus_pos = [&](int k) {
    for (int i = 0; i < N; ++i)
      if (base.ks[i] == k) return i;
    fail(ErrorCode::MismatchedBases,
         "wavenumber " + std::to_string(k) + " is not among the tuned modes");
  };
  std::vector<int> perm;
  for (int k : sid.ks) perm.push_back(plus_pos(k));
  for (int a = 0; a < p; ++a)
    for (int b = a; b < p; ++b) {
      int pos = plus_pos(sid.ks[a] + sid.ks[b]);
      if (std::find(perm.begin(), perm.end(), pos) == perm.end()) perm.push_back(pos);
    }
  for (int i = 0; i < 2 * N && (int)perm.size() < p * p + p; ++i)
    if (std::find(perm.begin(), perm.end(), i) == perm.end()) perm.push_back(i);
  require((int)perm.size() == p * p + p, ErrorCode::PreconditionError,
          "not enough coordinates for the realizer sub-block");
  for (int i = 0; i < 2 * N; ++i)
    if (std::find(perm.begin(), perm.end(), i) == perm.end()) perm.push_back(i);
  const QuadraticSystem ambp = permute_system(amb, perm);

  // target field; "restriction" clones the slow-block restriction of G itself
  TargetField target;
  if (cfg.at("target").is_string() && cfg.at("target").get<std::string>() == "restriction") {
    target.p = p;
    target.D = Tensor3R(p, p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        for (int l = 0; l < p; ++l) target.D.at(i, j, l) = ambp.K.at(i, j, l);
    target.R = Mat::Zero(p, p);
    target.f = Vec::Zero(p);
  } else {
    target = target_from_json(cfg.at("target"));
    require(target.p == p, ErrorCode::PreconditionError, "target dimension must equal p");
  }
  Vec worst;
  const double margin =
      target.inward_margin(cfg.value("inward_samples", 64),
                           cm.seed >= 0 ? (unsigned)cm.seed : 1u, &worst);
  rep["inward_margin"] = margin;
  if (margin > 0.0 && !cfg.value("allow_outward", false)) {
    std::string qs = "[";
    for (int i = 0; i < worst.size(); ++i) qs += (i ? ", " : "") + format_g17(worst(i));
    fail(ErrorCode::PreconditionError,
         "target field points outward on the boundary sample " + qs + "], F.q = " +
             format_g17(margin));
  }

  // realizer on the leading sub-block
  const int nsub = p * p + p;
  Tensor3R Ksub(nsub, nsub, nsub);
  for (int i = 0; i < nsub; ++i)
    for (int j = 0; j < nsub; ++j)
      for (int l = 0; l < nsub; ++l) Ksub.at(i, j, l) = ambp.K.at(i, j, l);
  SlowFastSplit split = stage("realizer", [&] { return build_realizer(target, Ksub, xi); });
  rep["T"] = mat_json(split.T);

  // required full linear part: target blocks on the slow rows, the realizer
  // coupling into the sub-block columns, xi^-1 decay on every fast coordinate
  Mat Mreq = Mat::Zero(2 * N, 2 * N);
  Mreq.topLeftCorner(p, p) = target.R;
  Mreq.block(0, p, p, nsub - p) = split.T / xi;
  for (int r = p; r < 2 * N; ++r) Mreq(r, r) = -1.0 / xi;
  Vec greq = Vec::Zero(2 * N);
  greq.head(p) = target.f;

  // back to the original mode ordering for the control solves
  std::vector<int> inv(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = (int)i;
  QuadraticSystem req;
  req.N = 2 * N;
  req.K = Tensor3R(2 * N, 2 * N, 2 * N);
  req.M = Mreq;
  req.g = greq;
  req = permute_system(req, inv);
  ControlTarget ct;
  ct.Tpp = req.M.topLeftCorner(N, N);
  ct.Tpm = req.M.topRightCorner(N, N);
  ct.Tmp = req.M.bottomLeftCorner(N, N);
  ct.Tmm = req.M.bottomRightCorner(N, N);
  ct.fplus = req.g.head(N);
  ct.fminus = req.g.tail(N);
  HeatSource2D u1 = stage("control", [&] { return solve_control(ct, pairs, prof, basis); });
  HeatSource2D eta1 = stage("forcing", [&] {
    return solve_forcing(ct.fplus, ct.fminus, pairs, prof, basis, cfg.value("delta0", -1.0));
  });

  ReducedSystem fin = stage("assemble", [&] {
    return assemble_reduced(prof, pairs, u1.to_field(), eta1.to_field(), gamma);
  });
  const double errM = (fin.M - req.M).cwiseAbs().maxCoeff() / (1.0 + req.M.cwiseAbs().maxCoeff());
  const double errf = (fin.f - req.g).cwiseAbs().maxCoeff() / (1.0 + req.g.cwiseAbs().maxCoeff());
  rep["roundtrip_rel_M"] = errM;
  rep["roundtrip_rel_f"] = errf;

  // integrate the assembled full system against the prescribed field
  const double T = cfg.value("T", 20.0);
  const double dt = cfg.value("dt", 1e-2);
  Vec Y0;
  if (cfg.contains("Y0"))
    Y0 = vec_from_json(cfg.at("Y0"));
  else
    Y0 = Vec::Constant(p, 0.3 / std::sqrt(double(p)));
  require((int)Y0.size() == p, ErrorCode::PreconditionError, "Y0 must have p entries");

  QuadraticSystem finq = permute_system(to_quadratic(fin), perm);
  Vec X0 = Vec::Zero(2 * N);
  X0.head(p) = Y0;
  X0.tail(2 * N - p) = xi * finq.K.apply(X0).tail(2 * N - p);  // zeroth-order manifold start
  Trajectory full = stage("integrate", [&] { return integrate(finq, X0, T, dt); });

  QuadraticSystem tgt;
  tgt.N = p;
  tgt.K = target.D;
  tgt.M = target.R;
  tgt.g = target.f;
  Trajectory ref = stage("integrate", [&] { return integrate(tgt, Y0, T, dt); });

  require(full.t.size() == ref.t.size(), ErrorCode::PreconditionError, "sample count mismatch");
  Table tab([&] {
    std::vector<std::string> cols{"t"};
    for (int i = 0; i < p; ++i) cols.push_back("y" + std::to_string(i) + "_realized");
    for (int i = 0; i < p; ++i) cols.push_back("y" + std::to_string(i) + "_target");
    return cols;
  }());
  double sup = 0.0;
  for (size_t s = 0; s < full.t.size(); ++s) {
    std::vector<double> row{full.t[s]};
    for (int i = 0; i < p; ++i) row.push_back(full.x[s](i));
    for (int i = 0; i < p; ++i) row.push_back(ref.x[s](i));
    tab.rows.push_back(row);
    sup = std::max(sup, (full.x[s].head(p) - ref.x[s]).lpNorm<Eigen::Infinity>());
  }
  write_text_file(out_path(cm, "realize_traj.tsv"), tab.tsv());
  rep["sup_error"] = sup;
  rep["xi"] = xi;
  write_text_file(out_path(cm, "realize_report.json"), rep.dump(2) + "\n");
  std::cout << "sup error " << format_g17(sup) << " over T = " << format_g17(T)
            << ", report " << out_path(cm, "realize_report.json") << "\n";
  return 0;
}

// shared by simulate and compare: tuned profile on the grid plus sources
struct PdeSetup {
  Grid grid;
  HeatProfile prof;           // discretely tuned
  HeatSource2D u1, eta1;
  std::vector<ModePair> pairs;
};

PdeSetup pde_setup(const Json& cfg, Json& rep) {
  PdeSetup s{Grid{}, [&] {
               ProfileParams p = profile_from_json(cfg.at("profile"));
               Grid g = grid_from_json(cfg.value("grid", Json::object()), p.h);
               rep["grid"] = Json{{"Nx", g.Nx}, {"Ny", g.Ny}, {"h", g.h}};
               return discrete_tune(p, g);
             }(),
             {}, {}, {}};
  s.grid = grid_from_json(cfg.value("grid", Json::object()), s.prof.params().h);
  rep["mu"] = s.prof.params().mu;
  rep["d"] = s.prof.params().d;
  const int N = s.prof.params().N;
  if (cfg.contains("u1_target") || cfg.contains("fplus") || cfg.contains("fminus")) {
    s.pairs = biorthogonalize(s.prof, N);
    const int basis = cfg.value("basis_size", 16);
    if (cfg.contains("u1_target")) {
      ControlTarget ct = control_target_from(cfg.at("u1_target"), N);
      s.u1 = solve_control(ct, s.pairs, s.prof, basis);
    }
    Vec fp = cfg.contains("fplus") ? vec_from_json(cfg.at("fplus")) : Vec::Zero(N);
    Vec fm = cfg.contains("fminus") ? vec_from_json(cfg.at("fminus")) : Vec::Zero(N);
    if (fp.lpNorm<Eigen::Infinity>() > 0.0 || fm.lpNorm<Eigen::Infinity>() > 0.0)
      s.eta1 = solve_forcing(fp, fm, s.pairs, s.prof, basis, cfg.value("delta0", -1.0));
  }
  return s;
}

int cmd_simulate(const Common& cm) {
  Json cfg = load_config(cm);
  Json rep;
  rep["digest"] = config_digest(cfg);
  PdeSetup su = pde_setup(cfg, rep);
  const double gamma = cfg.value("gamma", 1e-3);
  const double dt = cfg.value("dt", 0.02);
  const double T = cfg.at("T").get<double>();
  const int stride = cfg.value("sample_stride", 5);
  Simulator sim(su.grid, su.prof, gamma, su.u1, su.eta1, dt);
  Json nr = Json::array();
  for (const auto& m : sim.modes()) nr.push_back(m.null_residual);
  rep["null_residuals"] = nr;

  const int N = sim.nmodes();
  if (cfg.contains("X0")) {
    Vec X0 = vec_from_json(cfg.at("X0"));
    sim.set_state_from_slow(X0);
  } else {
    sim.set_base_state();
  }
  Table tab([&] {
    std::vector<std::string> cols{"t"};
    for (int i = 0; i < N; ++i) cols.push_back("xp" + std::to_string(i + 1));
    for (int i = 0; i < N; ++i) cols.push_back("xm" + std::to_string(i + 1));
    cols.push_back("fast_norm");
    cols.push_back("mean_u");
    return cols;
  }());
  auto sample = [&] {
    std::vector<double> row{sim.state().t};
    Vec X = sim.project_slow();
    for (int i = 0; i < 2 * N; ++i) row.push_back(X(i));
    row.push_back(sim.fast_norm());
    row.push_back(sim.mean_u());
    tab.rows.push_back(row);
  };
  const long steps = std::lround(T / dt);
  sample();
  for (long s = 1; s <= steps; ++s) {
    sim.step();
    if (s % stride == 0 || s == steps) sample();
  }
  write_text_file(out_path(cm, "simulate_traj.tsv"), tab.tsv());
  rep["boundary_residual"] = sim.boundary_residual();
  rep["final_fast_norm"] = sim.fast_norm();
  rep["final_mean_u"] = sim.mean_u();
  write_text_file(out_path(cm, "simulate_report.json"), rep.dump(2) + "\n");
  std::cout << "T " << format_g17(sim.state().t) << ", fast norm "
            << format_g17(sim.fast_norm()) << ", report "
            << out_path(cm, "simulate_report.json") << "\n";
  return 0;
}

int cmd_compare(const Common& cm) {
  Json cfg = load_config(cm);
  Json rep;
  rep["digest"] = config_digest(cfg);
  PdeSetup su = pde_setup(cfg, rep);
  const double dt = cfg.value("dt", 0.02);
  const int stride = cfg.value("sample_stride", 5);
  std::vector<double> gammas;
  for (const auto& g : cfg.value("gammas", Json::array({1e-2, 3e-3, 1e-3})))
    gammas.push_back(g.get<double>());
  require(!gammas.empty(), ErrorCode::PreconditionError, "gammas must be nonempty");
  const int N = su.prof.params().N;
  Vec X0 = cfg.contains("X0") ? vec_from_json(cfg.at("X0")) : Vec::Zero(2 * N);
  require((int)X0.size() == 2 * N, ErrorCode::PreconditionError, "X0 must have 2N entries");

  Json scans = Json::array();
  std::vector<double> errs;
  for (double gamma : gammas) {
    Simulator sim(su.grid, su.prof, gamma, su.u1, su.eta1, dt);
    QuadraticSystem red = sim.reduced_system();
    // step count snapped to the stride so PDE and ODE sample grids coincide
    long steps = std::lround(1.0 / (10.0 * gamma * dt));
    steps -= steps % stride;
    require(steps > 0, ErrorCode::PreconditionError, "horizon shorter than one stride");
    const double T = steps * dt;
    sim.set_state_from_slow(X0);

    std::vector<double> ts{0.0};
    std::vector<Vec> xs{sim.project_slow()};
    for (long s = 1; s <= steps; ++s) {
      sim.step();
      if (s % stride == 0 || s == steps) {
        ts.push_back(sim.state().t);
        xs.push_back(sim.project_slow());
      }
    }
    Trajectory ode = integrate(red, X0, gamma * T, gamma * dt * stride);
    require(ode.t.size() == ts.size(), ErrorCode::PreconditionError,
            "sample alignment failure");
    double sup = 0.0, scale = 0.0;
    Table tab([&] {
      std::vector<std::string> cols{"t"};
      for (int i = 0; i < 2 * N; ++i) cols.push_back("x" + std::to_string(i) + "_pde");
      for (int i = 0; i < 2 * N; ++i) cols.push_back("x" + std::to_string(i) + "_ode");
      return cols;
    }());
    for (size_t s = 0; s < ts.size(); ++s) {
      sup = std::max(sup, (xs[s] - ode.x[s]).lpNorm<Eigen::Infinity>());
      scale = std::max(scale, ode.x[s].lpNorm<Eigen::Infinity>());
      std::vector<double> row{ts[s]};
      for (int i = 0; i < 2 * N; ++i) row.push_back(xs[s](i));
      for (int i = 0; i < 2 * N; ++i) row.push_back(ode.x[s](i));
      tab.rows.push_back(row);
    }
    const double rel = sup / std::max(scale, 1e-300);
    errs.push_back(rel);
    scans.push_back(Json{{"gamma", gamma}, {"T", T}, {"sup_error", sup}, {"rel_error", rel}});
    std::ostringstream name;
    name << "compare_traj_gamma" << gamma << ".tsv";
    write_text_file(out_path(cm, name.str()), tab.tsv());
    std::cout << "gamma " << format_g17(gamma) << ": rel sup error " << format_g17(rel)
              << "\n";
  }
  rep["scan"] = scans;

  // fitted exponent of err ~ gamma^s (reported, not asserted)
  if (gammas.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < gammas.size(); ++i) {
      const double lx = std::log(gammas[i]), ly = std::log(std::max(errs[i], 1e-300));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    const double n = (double)gammas.size();
    rep["fitted_exponent"] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  bool monotone = true;
  for (size_t i = 1; i < errs.size(); ++i) monotone = monotone && errs[i] <= errs[i - 1];
  const double tol = cfg.value("tol_rel", 0.10);
  const bool pass = monotone && errs.back() <= tol;
  rep["monotone"] = monotone;
  rep["pass"] = pass;
  write_text_file(out_path(cm, "compare_report.json"), rep.dump(2) + "\n");
  std::cout << "monotone " << (monotone ? "yes" : "no") << ", smallest-gamma rel error "
            << format_g17(errs.back()) << ", report " << out_path(cm, "compare_report.json")
            << "\n";
  if (!pass) fail(ErrorCode::NonConvergence, "gamma scan criterion not met");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marangoni slow-manifold toolkit"};
  app.require_subcommand(1);
  Common cm;
  std::vector<std::pair<std::string, int (*)(const Common&)>> cmds = {
      {"spectrum", &cmd_spectrum}, {"tune", &cmd_tune},       {"coeffs", &cmd_coeffs},
      {"control", &cmd_control},   {"realize", &cmd_realize}, {"simulate", &cmd_simulate},
      {"compare", &cmd_compare}};
  int (*chosen)(const Common&) = nullptr;
  for (auto& [name, fn] : cmds) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", cm.config, "json config document")->required();
    sub->add_option("--out", cm.out, "output directory");
    sub->add_option("--seed", cm.seed, "seed override for randomized scans");
    sub->add_option("--threads", cm.threads, "worker threads (modules are sequential)");
    int (*fn_copy)(const Common&) = fn;
    sub->callback([&chosen, fn_copy] { chosen = fn_copy; });
  }
  CLI11_PARSE(app, argc, argv);
  try {
    return chosen(cm);
  } catch (const marangoni::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
