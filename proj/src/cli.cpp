#include "cinn/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "cinn/adversarial.hpp"
#include "cinn/certification.hpp"
#include "cinn/data_io.hpp"
#include "cinn/gradients.hpp"
#include "cinn/measures.hpp"
#include "cinn/model.hpp"
#include "cinn/reachability.hpp"
#include "cinn/rng.hpp"
#include "cinn/solver.hpp"
#include "cinn/training.hpp"

namespace cinn {

namespace {

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_double(item));
  }
  if (out.empty()) throw InvalidInput("empty numeric list: '" + s + "'");
  return out;
}

Vector parse_vector_arg(const std::string& arg) {
  std::vector<double> values;
  if (std::filesystem::exists(arg)) {
    std::ifstream in(arg);
    std::string tok;
    while (in >> tok) {
      while (!tok.empty() && tok.back() == ',') tok.pop_back();
      if (!tok.empty()) values.push_back(parse_double(tok));
    }
  } else {
    values = parse_double_list(arg);
  }
  Vector v(static_cast<Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i)
    v[static_cast<Index>(i)] = values[i];
  return v;
}

void print_vector(const char* name, const Vector& v) {
  std::cout << name;
  for (Index i = 0; i < v.size(); ++i) std::cout << ' ' << format_double(v[i]);
  std::cout << '\n';
}

struct LoadedModel {
  ImplicitNetwork net;
  Vector eta;  // resolved weights, always sized n
};

/// Resolution order: model-file eta, then the --eta flag, then ones.
LoadedModel load_for_analysis(const std::string& model_path,
                              const std::string& eta_flag) {
  const ModelFile mf = load_model(model_path);
  LoadedModel lm;
  lm.net = mf.as_network();
  if (mf.has_eta()) {
    if (!eta_flag.empty())
      std::cout << "# note: model file carries eta; --eta ignored\n";
    lm.eta = mf.eta;
  } else if (eta_flag.empty() || eta_flag == "ones") {
    lm.eta = Vector::Ones(lm.net.n());
  } else if (eta_flag == "auto") {
    lm.eta = suggest_eta(lm.net.W).eta();
  } else if (eta_flag.rfind("file:", 0) == 0) {
    lm.eta = parse_vector_arg(eta_flag.substr(5));
  } else {
    throw InvalidInput("--eta must be auto, ones or file:<path>");
  }
  return lm;
}

bool is_idx_spec(const std::string& spec) { return spec.rfind("idx:", 0) == 0; }

int run_app(int argc, const char* const* argv) {
  CLI::App app{"Contraction-based analysis, certification and training of "
               "equilibrium networks"};
  app.require_subcommand(1);

  // check ------------------------------------------------------------------
  auto* check = app.add_subcommand(
      "check", "Well-posedness check: weighted measure, verdict, alpha_max");
  std::string check_model, check_eta;
  check->add_option("--model", check_model, "model file")->required();
  check->add_option("--eta", check_eta, "auto | ones | file:<path>");
  check->callback([&] {
    const LoadedModel lm = load_for_analysis(check_model, check_eta);
    const ContractionCertificate cert =
        check_wellposed(lm.net, PositiveWeights(lm.eta));
    std::cout << "mu " << format_double(cert.mu) << '\n';
    std::cout << "wellposed " << (cert.wellposed ? "true" : "false") << '\n';
    std::cout << "alpha_max " << format_double(cert.alpha_max) << '\n';
    if (!cert.wellposed) throw NotContractive("model is not well-posed");
  });

  // solve ------------------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "Fixed point and readout at an input");
  std::string solve_model, solve_eta, solve_input;
  double solve_tol = 1e-10;
  solve->add_option("--model", solve_model, "model file")->required();
  solve->add_option("--input", solve_input, "comma separated values or a file")
      ->required();
  solve->add_option("--eta", solve_eta, "auto | ones | file:<path>");
  solve->add_option("--tol", solve_tol, "residual tolerance");
  solve->callback([&] {
    const LoadedModel lm = load_for_analysis(solve_model, solve_eta);
    SolveConfig cfg;
    cfg.eta = lm.eta;
    cfg.tol = solve_tol;
    const Vector x = parse_vector_arg(solve_input);
    const SolveReport rep = solve_fixed_point(lm.net, x, cfg);
    if (!rep.converged) throw SolveFailure("solve did not converge");
    std::cout << "iterations " << rep.iterations << '\n';
    std::cout << "residual " << format_double(rep.residual) << '\n';
    print_vector("z_star", rep.z_star);
    print_vector("f", lm.net.output_map(rep.z_star));
  });

  // reach ------------------------------------------------------------------
  auto* reach = app.add_subcommand("reach", "Output box over an input box");
  std::string reach_model, reach_eta, reach_center, reach_method = "inclusion";
  double reach_eps = 0.0, reach_tol = 1e-10;
  long reach_grid = 11;
  reach->add_option("--model", reach_model, "model file")->required();
  reach->add_option("--center", reach_center, "box center")->required();
  reach->add_option("--eps", reach_eps, "box radius")->required();
  reach->add_option("--method", reach_method,
                    "inclusion | lipschitz | signsplit | brute");
  reach->add_option("--grid", reach_grid, "grid points per dim (brute)");
  reach->add_option("--eta", reach_eta, "auto | ones | file:<path>");
  reach->add_option("--tol", reach_tol, "residual tolerance");
  reach->callback([&] {
    const LoadedModel lm = load_for_analysis(reach_model, reach_eta);
    SolveConfig cfg;
    cfg.eta = lm.eta;
    cfg.tol = reach_tol;
    const Vector center = parse_vector_arg(reach_center);
    const IntervalVector box = IntervalVector::ball(center, reach_eps);
    ReachResult res;
    if (reach_method == "inclusion")
      res = reach_inclusion(lm.net, box, cfg);
    else if (reach_method == "lipschitz")
      res = reach_lipschitz(lm.net, center, reach_eps, cfg);
    else if (reach_method == "signsplit")
      res = reach_sign_split(lm.net, box, cfg);
    else if (reach_method == "brute")
      res = brute_force_tight_inclusion(lm.net, box, reach_grid, cfg);
    else
      throw InvalidInput("unknown reach method '" + reach_method + "'");
    std::cout << "method " << reach_method_name(res.method) << '\n';
    std::cout << "converged " << (res.converged ? "true" : "false") << '\n';
    if (res.converged) {
      print_vector("output_lower", res.output_box.lower);
      print_vector("output_upper", res.output_box.upper);
    }
    if (!res.converged) throw SolveFailure("reach computation did not converge");
  });

  // certify ----------------------------------------------------------------
  auto* certify = app.add_subcommand(
      "certify", "Certified-fraction curve over a dataset");
  std::string cert_model, cert_eta, cert_data, cert_eps_list, cert_out,
      cert_method = "inclusion";
  long cert_limit = 0;
  double cert_tol = 1e-10;
  bool cert_clip = false;
  certify->add_option("--model", cert_model, "model file")->required();
  certify->add_option("--data", cert_data, "dataset spec")->required();
  certify->add_option("--eps-list", cert_eps_list, "comma separated radii")
      ->required();
  certify->add_option("--method", cert_method, "lipschitz | inclusion");
  certify->add_option("--out", cert_out, "output CSV path")->required();
  certify->add_option("--limit", cert_limit, "use only the first k samples");
  certify->add_option("--eta", cert_eta, "auto | ones | file:<path>");
  certify->add_option("--tol", cert_tol, "residual tolerance");
  certify->add_flag("--clip", cert_clip,
                    "clip certification boxes to the unit box");
  certify->callback([&] {
    const LoadedModel lm = load_for_analysis(cert_model, cert_eta);
    Dataset ds = load_dataset_spec(cert_data);
    ds.validate();
    if (cert_limit > 0 && cert_limit < ds.size()) {
      ds.inputs.resize(cert_limit);
      ds.labels.resize(cert_limit);
    }
    SolveConfig cfg;
    cfg.eta = lm.eta;
    cfg.tol = cert_tol;
    const CertMethod method = cert_method == "lipschitz"
                                  ? CertMethod::lipschitz
                                  : CertMethod::inclusion;
    if (cert_method != "lipschitz" && cert_method != "inclusion")
      throw InvalidInput("unknown certify method '" + cert_method + "'");
    const Curve curve = certified_fraction_curve(
        lm.net, PositiveWeights(lm.eta), ds.inputs, ds.labels,
        parse_double_list(cert_eps_list), method, cfg,
        std::filesystem::path(cert_model).stem().string(), ExecMode::openmp,
        cert_clip);
    write_curves_csv(cert_out, {curve});
    for (const CurvePoint& p : curve.points)
      std::cout << "eps " << format_double(p.eps) << " fraction "
                << format_double(p.fraction) << '\n';
  });

  // train ------------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Train a model from a config");
  std::string train_config, train_out, train_data;
  train_cmd->add_option("--config", train_config, "training config file")
      ->required();
  train_cmd->add_option("--out", train_out, "output model path")->required();
  train_cmd->add_option("--data", train_data, "dataset spec (overrides config)");
  train_cmd->callback([&] {
    TrainFileConfig fc = load_training_config(train_config);
    const std::string spec = train_data.empty() ? fc.dataset : train_data;
    if (spec.empty())
      throw InvalidInput("no dataset: set 'dataset' in the config or --data");
    Dataset ds = load_dataset_spec(spec);
    ds.validate();
    int q = 0;
    for (int y : ds.labels) q = std::max(q, y + 1);
    TrainableModel model = TrainableModel::init(
        fc.n, ds.dim(), q, fc.activation, fc.gamma, fc.train.seed);
    const TrainReport report = train(model, ds.inputs, ds.labels, fc.train);
    save_model(train_out, report.model);
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
      const EpochStats& s = report.epochs[e];
      std::cout << "epoch " << e + 1 << " objective "
                << format_double(s.objective) << " nominal "
                << format_double(s.nominal_loss) << " robust "
                << format_double(s.robust_term) << " accuracy "
                << format_double(s.clean_accuracy) << '\n';
      std::cout << "# epoch " << e + 1 << " wall_seconds " << s.wall_seconds
                << '\n';
    }
    std::cout << "model_written " << train_out << '\n';
  });

  // attack -----------------------------------------------------------------
  auto* attack = app.add_subcommand(
      "attack", "Empirical robustness curve under FGSM or PGD");
  std::string atk_model, atk_eta, atk_data, atk_eps_list, atk_out,
      atk_method = "pgd";
  long atk_limit = 0;
  int atk_steps = 40;
  double atk_step_size = 0.0, atk_tol = 1e-10;
  std::uint64_t atk_seed = 0;
  bool atk_clip = false, atk_no_clip = false;
  attack->add_option("--model", atk_model, "model file")->required();
  attack->add_option("--data", atk_data, "dataset spec")->required();
  attack->add_option("--method", atk_method, "pgd | fgsm");
  attack->add_option("--eps-list", atk_eps_list, "comma separated radii")
      ->required();
  attack->add_option("--out", atk_out, "output CSV path")->required();
  attack->add_option("--steps", atk_steps, "pgd steps");
  attack->add_option("--step-size", atk_step_size, "pgd step size (0: eps/10)");
  attack->add_option("--seed", atk_seed, "pgd random start seed");
  attack->add_option("--limit", atk_limit, "use only the first k samples");
  attack->add_option("--eta", atk_eta, "auto | ones | file:<path>");
  attack->add_option("--tol", atk_tol, "residual tolerance");
  attack->add_flag("--clip", atk_clip, "clip iterates to the unit box");
  attack->add_flag("--no-clip", atk_no_clip, "never clip iterates");
  attack->callback([&] {
    const LoadedModel lm = load_for_analysis(atk_model, atk_eta);
    Dataset ds = load_dataset_spec(atk_data);
    ds.validate();
    if (atk_limit > 0 && atk_limit < ds.size()) {
      ds.inputs.resize(atk_limit);
      ds.labels.resize(atk_limit);
    }
    SolveConfig cfg;
    cfg.eta = lm.eta;
    cfg.tol = atk_tol;
    AttackConfig acfg;
    acfg.method = atk_method == "fgsm" ? AttackMethod::fgsm : AttackMethod::pgd;
    if (atk_method != "fgsm" && atk_method != "pgd")
      throw InvalidInput("unknown attack method '" + atk_method + "'");
    acfg.steps = atk_steps;
    acfg.step_size = atk_step_size;
    acfg.seed = atk_seed;
    // Pixel data defaults to clipped attacks; synthetic data to unclipped.
    acfg.clip_to_unit_box = is_idx_spec(atk_data);
    if (atk_clip) acfg.clip_to_unit_box = true;
    if (atk_no_clip) acfg.clip_to_unit_box = false;
    const Curve curve = empirical_robust_fraction(
        lm.net, ds.inputs, ds.labels, parse_double_list(atk_eps_list), acfg,
        cfg, std::filesystem::path(atk_model).stem().string());
    write_curves_csv(atk_out, {curve});
    for (const CurvePoint& p : curve.points)
      std::cout << "eps " << format_double(p.eps) << " fraction "
                << format_double(p.fraction) << '\n';
  });

  // bench ------------------------------------------------------------------
  auto* bench = app.add_subcommand(
      "bench", "Tightness/iteration comparison of the reachability methods");
  std::string bench_sizes = "4,8,16", bench_out;
  long bench_trials = 5;
  double bench_eps = 0.1;
  std::uint64_t bench_seed = 1;
  bench->add_option("--sizes", bench_sizes, "comma separated hidden sizes");
  bench->add_option("--trials", bench_trials, "trials per size");
  bench->add_option("--eps", bench_eps, "input box radius");
  bench->add_option("--seed", bench_seed, "network generator seed");
  bench->add_option("--out", bench_out, "optional CSV path");
  bench->callback([&] {
    std::ostringstream csv;
    csv << "n,trial,method,width,iterations,converged\n";
    std::cout << "n,trial,method,width,iterations,converged\n";
    for (double size_d : parse_double_list(bench_sizes)) {
      const Index n = static_cast<Index>(size_d);
      for (long trial = 0; trial < bench_trials; ++trial) {
        Rng rng(bench_seed + 7919 * static_cast<std::uint64_t>(trial) +
                104729 * static_cast<std::uint64_t>(n));
        const Index r = 2, q = 2;
        const double s = 1.0 / std::sqrt(static_cast<double>(n));
        Matrix t(n, n), u(n, r), cmat(q, n);
        for (Index i = 0; i < n; ++i)
          for (Index j = 0; j < n; ++j) t(i, j) = rng.uniform(-s, s);
        for (Index i = 0; i < n; ++i)
          for (Index j = 0; j < r; ++j) u(i, j) = rng.uniform(-1.0, 1.0);
        for (Index i = 0; i < q; ++i)
          for (Index j = 0; j < n; ++j) cmat(i, j) = rng.uniform(-1.0, 1.0);
        ImplicitNetwork net;
        net.W = parametrize_weight(t, PositiveWeights::ones(n),
                                   rng.uniform(0.0, 0.8));
        net.U = u;
        net.C = cmat;
        net.b = Vector::Zero(n);
        net.c = Vector::Zero(q);
        net.activation = Activation::relu();
        Vector center(r);
        for (Index j = 0; j < r; ++j) center[j] = rng.uniform(-1.0, 1.0);
        const IntervalVector box = IntervalVector::ball(center, bench_eps);
        SolveConfig cfg;

        struct Entry {
          const char* name;
          ReachResult res;
          double ms;
        };
        std::vector<Entry> entries;
        auto timed = [&](const char* name, auto&& fn) {
          const double t0 = omp_get_wtime();
          ReachResult res = fn();
          entries.push_back({name, std::move(res),
                             (omp_get_wtime() - t0) * 1e3});
        };
        timed("inclusion", [&] { return reach_inclusion(net, box, cfg); });
        timed("signsplit", [&] { return reach_sign_split(net, box, cfg); });
        timed("lipschitz",
              [&] { return reach_lipschitz(net, center, bench_eps, cfg); });
        timed("brute", [&] {
          return brute_force_tight_inclusion(net, box, 21, cfg);
        });
        for (const Entry& e : entries) {
          double width = 0.0;
          if (e.res.converged)
            width = e.res.output_box.width().maxCoeff();
          std::ostringstream row;
          row << n << ',' << trial << ',' << e.name << ','
              << format_double(width) << ','
              << (e.res.evaluations > 0 ? e.res.evaluations : e.res.iterations)
              << ',' << (e.res.converged ? 1 : 0) << '\n';
          std::cout << row.str();
          csv << row.str();
          std::cout << "# " << e.name << " wall_ms " << e.ms << '\n';
        }
      }
    }
    if (!bench_out.empty()) {
      std::ofstream out(bench_out);
      if (!out) throw IoError("cannot open for writing: " + bench_out);
      out << csv.str();
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  return 0;
}

}  // namespace

int cli_run(int argc, const char* const* argv) {
  try {
    return run_app(argc, argv);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NotContractive& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const SolveFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace cinn
