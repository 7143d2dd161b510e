// Times the serial reference path of each batch kernel against the OpenMP
// path and reports the speedup. --smoke shrinks the workloads so the binary
// doubles as a fast consistency check in the test suite.

#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include <omp.h>

#include "cinn/adversarial.hpp"
#include "cinn/certification.hpp"
#include "cinn/measures.hpp"
#include "cinn/model.hpp"
#include "cinn/parallel.hpp"
#include "cinn/reachability.hpp"
#include "cinn/rng.hpp"
#include "cinn/solver.hpp"

using namespace cinn;

namespace {

ImplicitNetwork random_net(Index n, Index r, Index q, std::uint64_t seed) {
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix t(n, n), u(n, r), c(q, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) t(i, j) = rng.uniform(-s, s);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < r; ++j) u(i, j) = rng.uniform(-1.0, 1.0);
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < n; ++j) c(i, j) = rng.uniform(-1.0, 1.0);
  ImplicitNetwork net;
  net.W = parametrize_weight(t, PositiveWeights::ones(n), 0.3);
  net.U = u;
  net.C = c;
  net.b = Vector::Zero(n);
  net.c = Vector::Zero(q);
  net.activation = Activation::relu();
  return net;
}

template <class F>
double time_ms(F&& fn) {
  const double t0 = omp_get_wtime();
  fn();
  return (omp_get_wtime() - t0) * 1e3;
}

void report(const std::string& name, double serial_ms, double parallel_ms,
            bool identical) {
  std::cout << name << ": serial " << serial_ms << " ms, openmp "
            << parallel_ms << " ms, speedup "
            << (parallel_ms > 0 ? serial_ms / parallel_ms : 0.0)
            << (identical ? "" : "  [MISMATCH]") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  bool smoke = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--smoke") == 0) smoke = true;

  const long samples = smoke ? 32 : 512;
  const Index n = smoke ? 8 : 32;
  const Index r = 4, q = 3;
  std::cout << "threads available: " << max_parallel_threads() << '\n';

  const ImplicitNetwork net = random_net(n, r, q, 99);
  const PositiveWeights w = PositiveWeights::ones(n);
  SolveConfig cfg;

  Rng rng(7);
  std::vector<Vector> inputs;
  std::vector<int> labels;
  for (long i = 0; i < samples; ++i) {
    Vector x(r);
    for (Index j = 0; j < r; ++j) x[j] = rng.uniform(-1.0, 1.0);
    inputs.push_back(x);
    labels.push_back(static_cast<int>(rng.below(q)));
  }
  const std::vector<double> eps_list = {0.01, 0.05, 0.1};

  bool all_ok = true;

  {
    Curve a, b;
    const double ts = time_ms([&] {
      a = certified_fraction_curve(net, w, inputs, labels, eps_list,
                                   CertMethod::inclusion, cfg, "m",
                                   ExecMode::serial);
    });
    const double tp = time_ms([&] {
      b = certified_fraction_curve(net, w, inputs, labels, eps_list,
                                   CertMethod::inclusion, cfg, "m",
                                   ExecMode::openmp);
    });
    bool same = a.points.size() == b.points.size();
    for (std::size_t i = 0; same && i < a.points.size(); ++i)
      same = a.points[i].fraction == b.points[i].fraction &&
             a.points[i].eps == b.points[i].eps;
    all_ok = all_ok && same;
    report("certified_fraction_curve(inclusion)", ts, tp, same);
  }

  {
    const IntervalVector box = IntervalVector::ball(inputs.front(), 0.2);
    const long grid = smoke ? 11 : 41;
    ReachResult a, b;
    const double ts = time_ms([&] {
      a = brute_force_tight_inclusion(net, box, grid, cfg, ExecMode::serial);
    });
    const double tp = time_ms([&] {
      b = brute_force_tight_inclusion(net, box, grid, cfg, ExecMode::openmp);
    });
    const bool same =
        a.converged && b.converged &&
        (a.output_box.lower - b.output_box.lower).cwiseAbs().maxCoeff() == 0 &&
        (a.output_box.upper - b.output_box.upper).cwiseAbs().maxCoeff() == 0;
    all_ok = all_ok && same;
    report("brute_force_tight_inclusion", ts, tp, same);
  }

  {
    AttackConfig acfg;
    acfg.method = AttackMethod::pgd;
    acfg.steps = smoke ? 5 : 20;
    acfg.seed = 3;
    Curve a, b;
    const double ts = time_ms([&] {
      a = empirical_robust_fraction(net, inputs, labels, eps_list, acfg, cfg,
                                    "m", ExecMode::serial);
    });
    const double tp = time_ms([&] {
      b = empirical_robust_fraction(net, inputs, labels, eps_list, acfg, cfg,
                                    "m", ExecMode::openmp);
    });
    bool same = a.points.size() == b.points.size();
    for (std::size_t i = 0; same && i < a.points.size(); ++i)
      same = a.points[i].fraction == b.points[i].fraction;
    all_ok = all_ok && same;
    report("empirical_robust_fraction(pgd)", ts, tp, same);
  }

  if (!all_ok) {
    std::cerr << "serial and parallel paths disagree\n";
    return 1;
  }
  return 0;
}
