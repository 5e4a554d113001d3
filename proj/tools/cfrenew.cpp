// Copyright 2026 The cfrenew Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Exit codes: 0 success, 1 usage or argument errors,
// 2 rational input or exhausted precision, 3 sampling budget or quadrature
// failure, 4 incompatible tables.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfrenew/cfrenew.hpp"

namespace {

using namespace cfrenew;

int exit_code(errc e) {
  switch (e) {
    case errc::rational_input:
    case errc::precision_exhausted:
    case errc::digit_overflow:
    case errc::trailing_underflow:
      return 2;
    case errc::budget_exceeded:
    case errc::quadrature_failure:
      return 3;
    case errc::incompatible_tables:
      return 4;
    default:
      return 1;
  }
}

std::uint64_t default_seed() {
  if (const char* s = std::getenv("CFRENEW_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw error(errc::invalid_argument, std::string("CFRENEW_SEED is not an integer: ") + s);
    }
  }
  return sampling_options{}.seed;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw error(errc::invalid_argument, std::string("bad number in ") + what + ": " + item);
    }
  }
  if (out.empty()) throw error(errc::invalid_argument, std::string(what) + " is empty");
  return out;
}

std::vector<std::uint64_t> parse_digits(const std::string& text, const char* what) {
  std::vector<std::uint64_t> out;
  if (text.empty()) return out;
  for (double d : parse_list(text, what)) {
    if (!(d >= 1) || d != std::floor(d) || d > 1e18) {
      throw error(errc::invalid_digits, std::string(what) + " must be positive integers");
    }
    out.push_back(static_cast<std::uint64_t>(d));
  }
  return out;
}

std::uint64_t parse_count(double m, const char* what) {
  if (!(m >= 1) || m != std::floor(m) || m > 1e15) {
    throw error(errc::invalid_sample_count, std::string(what) + " must be a positive integer");
  }
  return static_cast<std::uint64_t>(m);
}

/// A decimal read as a real known to `bits` bits, for the dynamical commands
/// where a rational point would terminate the orbit.
hp_real decimal_as_real(const std::string& text, int bits) {
  const mpq_class c = hp_real::parse_decimal(text);
  mpq_class h(1);
  mpz_mul_2exp(h.get_den_mpz_t(), h.get_den_mpz_t(), static_cast<mp_bitcnt_t>(bits + 1));
  return hp_real::enclosure(ratio::from_mpq(c - h), ratio::from_mpq(c + h), bits);
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool is_csv(const std::string& path, const std::string& format) {
  if (!format.empty()) return format == "csv";
  return std::filesystem::path(path).extension() == ".csv";
}

void make_parent(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

void write_table(const std::string& path, const std::string& format, const distribution_table& t) {
  make_parent(path);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw error(errc::invalid_argument, "cannot open " + path);
  if (is_csv(path, format)) {
    write_csv(os, t);
  } else {
    write_json(os, t);
  }
}

distribution_table read_table(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw error(errc::incompatible_tables, "cannot open " + path);
  if (std::filesystem::path(path).extension() == ".csv") return read_csv(is);
  try {
    return table_from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::incompatible_tables, path + ": " + e.what());
  }
}

/// out.json -> out_R1e+06.json when several R are simulated.
std::string per_r_path(const std::string& out, double R, bool several) {
  if (!several) return out;
  std::filesystem::path p(out);
  char tag[32];
  std::snprintf(tag, sizeof tag, "_R%g", R);
  return (p.parent_path() / (p.stem().string() + tag + p.extension().string())).string();
}

std::ostream* open_or_stdout(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return &std::cout;
  make_parent(path);
  file.open(path, std::ios::binary);
  if (!file) throw error(errc::invalid_argument, "cannot open " + path);
  return &file;
}

struct edge_args {
  double step = 0.05;
  int count = 120;
  void add(CLI::App* cmd) {
    cmd->add_option("--bin-step", step, "log-width of the ratio bins")->capture_default_str();
    cmd->add_option("--bin-count", count, "number of finite ratio bins")->capture_default_str();
  }
  nlohmann::json json() const { return {{"step", step}, {"count", count}}; }
};

struct quad_args {
  quadrature_spec spec;
  void add(CLI::App* cmd) {
    cmd->add_option("--gauss-order", spec.gauss_order)->capture_default_str();
    cmd->add_option("--max-a1", spec.max_a1, "a_1 strips integrated explicitly")->capture_default_str();
    cmd->add_option("--max-depth", spec.max_depth, "subdivision depth")->capture_default_str();
    cmd->add_option("--tol", spec.target_tol, "quadrature target tolerance")->capture_default_str();
  }
  nlohmann::json json() const {
    return {{"gauss_order", spec.gauss_order},
            {"max_a1", spec.max_a1},
            {"max_depth", spec.max_depth},
            {"target_tol", spec.target_tol}};
  }
};

// ---------------------------------------------------------------------------

int cmd_expand(const std::string& x, std::size_t n) {
  const digit_sequence d = expand_digits(hp_real::from_decimal(x), n);
  std::cout << "digits:";
  for (auto a : d.digits) std::cout << ' ' << a;
  std::cout << "\nn,a_n,p_n,q_n\n";
  const auto cs = convergents(d);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    std::cout << cs[i].n << ',' << d.digits[i] << ',' << cs[i].p.get_str() << ',' << cs[i].q.get_str() << '\n';
  }
  return 0;
}

int cmd_renewal(const std::string& x, const std::string& R_text, std::size_t N) {
  std::cout << "R,n_R,q_prev,q_nR,ratio,trailing_digits\n";
  for (double R : parse_list(R_text, "--R")) {
    digit_stream s(hp_real::from_decimal(x));
    auto next = [&] { return s.next(); };
    const std::optional<renewal_result> r = renewal_index_from(next, R, N);
    if (!r) throw error(errc::rational_input, "expansion of " + x + " ends before q_n > " + fmt(R));
    std::cout << fmt(R) << ',' << r->n_R << ',' << r->q_prev.get_str() << ',' << r->q_nR.get_str() << ','
              << fmt(r->ratio) << ',';
    for (std::size_t k = 0; k < r->trailing_digits.size(); ++k) {
      std::cout << (k ? "-" : "") << r->trailing_digits[k];
    }
    std::cout << '\n';
  }
  return 0;
}

struct simulate_args {
  std::string R = "1e6";
  double M = 1e5;
  std::size_t N = 0;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  int bits = default_precision_bits;
  std::string out;
  std::string format;
  edge_args edges;
};

int cmd_simulate(const simulate_args& a) {
  const std::vector<double> Rs = parse_list(a.R, "--R");
  const std::uint64_t M = parse_count(a.M, "--M");
  sampling_options opt;
  opt.seed = a.seed;
  opt.workers = a.workers;
  opt.precision_bits = a.bits;
  const auto edges = log_spaced_edges(a.edges.step, a.edges.count);
  std::vector<distribution_table> tables;
  for (double R : Rs) {
    distribution_table t = empirical_pn(R, M, a.N, edges, default_tuples(a.N), opt);
    t.config = {{"command", "simulate"},
                {"seed", opt.seed},
                {"M", M},
                {"N", a.N},
                {"R", R},
                {"precision_bits", opt.precision_bits},
                {"block_size", opt.block_size},
                {"bins", a.edges.json()}};
    std::cout << "R=" << fmt(R) << " M=" << M << " rejected=" << t.rejected
              << " mass+rejected=" << fmt(t.total_mass() + static_cast<double>(t.rejected) / static_cast<double>(M))
              << '\n';
    if (!a.out.empty()) write_table(per_r_path(a.out, R, Rs.size() > 1), a.format, t);
    tables.push_back(std::move(t));
  }
  if (tables.size() > 1) {
    const distribution_table& last = tables.back();
    for (std::size_t i = 0; i + 1 < tables.size(); ++i) {
      const distance_report d = ks_distance(tables[i], last);
      std::cout << "KS(R=" << fmt(Rs[i]) << ", R=" << fmt(Rs.back()) << ")=" << fmt(d.ratio_ks)
                << " TV_digits=" << fmt(d.digit_tv) << '\n';
    }
  }
  return 0;
}

struct theory_args {
  double a = 1;
  std::string b = "inf";
  std::size_t N = 0;
  std::string c;
  std::string out;
  std::string format;
  edge_args edges;
  quad_args quad;
};

int cmd_theory(const theory_args& t) {
  const double b = t.b == "inf" ? INFINITY : parse_list(t.b, "--b").at(0);
  const digit_tuple c = parse_digits(t.c, "--c");
  if (!c.empty() && c.size() != t.N) throw error(errc::invalid_argument, "--c needs exactly N digits");
  const limit_law_quadrature quad(t.quad.spec);
  const estimate Z = quad.normalization();
  std::cout << "Z=" << fmt(Z.value) << " +- " << fmt(Z.error) << '\n';
  const estimate p = quad.pn(t.a, b, c);
  std::cout << "P(" << fmt(t.a) << ", " << fmt(b) << ", c=" << (c.empty() ? "*" : t.c) << ")=" << fmt(p.value)
            << " +- " << fmt(p.error) << '\n';
  if (!t.out.empty()) {
    distribution_table tab = theoretical_table(quad, log_spaced_edges(t.edges.step, t.edges.count), t.N,
                                               default_tuples(t.N));
    tab.config = {{"command", "theory"}, {"N", t.N}, {"bins", t.edges.json()}, {"quadrature", t.quad.json()}};
    write_table(t.out, t.format, tab);
  }
  return 0;
}

int cmd_compare(const std::string& f1, const std::string& f2, double threshold, const std::string& overlay) {
  const distribution_table t1 = read_table(f1);
  const distribution_table t2 = read_table(f2);
  if (t1.N != t2.N) throw error(errc::incompatible_tables, "tables have different N");
  const distance_report d = ks_distance(t1, t2);
  const double gap = sup_norm_gap(t1, t2);
  std::cout << "ratio_ks=" << fmt(d.ratio_ks) << "\ndigit_tv=" << fmt(d.digit_tv) << "\nsup_gap=" << fmt(gap)
            << "\nthreshold=" << fmt(threshold) << '\n'
            << (d.value <= threshold ? "PASS" : "FAIL") << '\n';
  if (!overlay.empty()) {
    make_parent(overlay);
    std::ofstream os(overlay, std::ios::binary);
    if (!os) throw error(errc::invalid_argument, "cannot open " + overlay);
    os << "row,ratio_lo,ratio_hi,column,mass_1,error_1,mass_2,error_2\n";
    for (std::size_t r = 0; r < t1.rows(); ++r) {
      for (std::size_t col = 0; col < t1.cols(); ++col) {
        std::string label = "other";
        if (col < t1.tuples.size()) {
          label.clear();
          for (std::size_t k = 0; k < t1.tuples[col].size(); ++k) {
            label += (k ? "-" : "") + std::to_string(t1.tuples[col][k]);
          }
          if (label.empty()) label = "*";
        }
        const std::size_t i = r * t1.cols() + col;
        os << r << ',' << fmt(t1.edges[r]) << ',' << fmt(t1.row_upper(r)) << ',' << label << ','
           << fmt(t1.mass[i]) << ',' << fmt(t1.error[i]) << ',' << fmt(t2.mass[i]) << ',' << fmt(t2.error[i])
           << '\n';
      }
    }
  }
  return 0;
}

struct flow_args {
  std::string minus, plus;
  std::string height = "0";
  double t = 1;
  int steps = 1;
  int bits = 256;
  std::optional<std::uint64_t> sample;
  std::uint64_t seed = 0;
  std::string out;
};

natural_ext_point flow_base(const flow_args& a) {
  if (a.sample) {
    random_stream rng(a.seed, *a.sample);
    return sample_mu2(rng, a.bits);
  }
  if (a.minus.empty() || a.plus.empty()) throw error(errc::invalid_argument, "give --minus and --plus, or --sample");
  return natural_ext_point(decimal_as_real(a.minus, a.bits), decimal_as_real(a.plus, a.bits));
}

int cmd_flow(const flow_args& a) {
  if (a.steps < 1) throw error(errc::invalid_argument, "--steps must be >= 1");
  const natural_ext_point base = flow_base(a);
  real y = real_zero(base.bits());
  mpfr_set_q(y.backend().data(), hp_real::parse_decimal(a.height).get_mpq_t(), MPFR_RNDN);
  const flow_point start(base, y);
  std::ofstream file;
  std::ostream& os = *open_or_stdout(a.out, file);
  os << "t,alpha_minus,alpha_plus,height,jumps\n";
  for (int i = 0; i <= a.steps; ++i) {
    const double t = a.t * i / a.steps + 0.0;
    const flow_result r = flow_evolve(start, t);
    os << fmt(t) << ',' << fmt(r.point.base.minus().to_double()) << ',' << fmt(r.point.base.plus().to_double())
       << ',' << r.point.height.str(20) << ',' << r.jumps << '\n';
  }
  return 0;
}

struct box_args {
  std::int64_t first = 1;
  std::string digits = "1";
  std::string y = "0,0.3";
  void add(CLI::App* cmd, const std::string& name) {
    cmd->add_option("--" + name + "-first", first, "index of the first constrained digit")->capture_default_str();
    cmd->add_option("--" + name + "-digits", digits, "constrained digits, comma separated")->capture_default_str();
    cmd->add_option("--" + name + "-y", y, "height range lo,hi")->capture_default_str();
  }
  flow_box box() const {
    const auto yy = parse_list(y, "box heights");
    if (yy.size() != 2 || !(yy[0] <= yy[1])) throw error(errc::invalid_argument, "box heights need lo,hi");
    return {cylinder::window(first, parse_digits(digits, "box digits")), yy[0], yy[1]};
  }
  nlohmann::json json() const { return {{"first", first}, {"digits", digits}, {"y", y}}; }
};

struct correlation_args {
  box_args A, B;
  std::string times = "0,1,2,5,10,20";
  double M = 1e5;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string out;
};

int cmd_correlation(const correlation_args& a) {
  correlation_options opt;
  opt.seed = a.seed;
  opt.workers = a.workers;
  const auto pts = correlation_estimate(a.A.box(), a.B.box(), parse_list(a.times, "--times"), parse_count(a.M, "--M"),
                                        opt);
  std::ofstream file;
  std::ostream& os = *open_or_stdout(a.out, file);
  os << "t,value,stderr,mu_a,mu_b\n";
  for (const auto& p : pts) {
    os << fmt(p.t) << ',' << fmt(p.value) << ',' << fmt(p.standard_error) << ',' << fmt(p.mu_a) << ','
       << fmt(p.mu_b) << '\n';
  }
  return 0;
}

struct contraction_args {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  double t_max = 30;
  double dt = 0.5;
  double shift = 0.01;
  bool backward = false;
  int bits = 1024;
  std::string out;
};

int cmd_contraction(const contraction_args& a) {
  random_stream rng(a.seed, a.index);
  const natural_ext_point x = sample_mu2(rng, a.bits);
  const flow_point p(x, 0.5 * roof_phi_double(x));
  std::optional<flow_point> q;
  if (a.backward) {
    q = unstable_leaf_point(p, hp_real::from_double(std::clamp(x.plus().to_double() + a.shift, 1e-6, 1 - 1e-6), a.bits));
  } else {
    q = stable_leaf_point(p, hp_real::from_double(std::clamp(x.minus().to_double() + a.shift, 1e-6, 1 - 1e-6), a.bits));
  }
  if (!q) throw error(errc::out_of_chart, "the shifted leaf point leaves the fiber; try a smaller --shift");
  std::ofstream file;
  std::ostream& os = *open_or_stdout(a.out, file);
  os << "t,aligned,distance\n";
  for (const auto& s : contraction_trace(p, *q, a.t_max, a.dt, a.backward)) {
    os << fmt(a.backward ? -s.t : s.t) << ',' << (s.aligned ? 1 : 0) << ',' << fmt(s.distance) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Renewal statistics of continued fraction denominators"};
  app.require_subcommand(1);
  std::function<int()> run;

  std::string ex_x;
  std::size_t ex_n = 10;
  auto* ex = app.add_subcommand("expand", "continued fraction digits and convergents of a decimal");
  ex->add_option("x", ex_x, "decimal in (0,1), read exactly")->required();
  ex->add_option("--n", ex_n, "number of digits")->capture_default_str();
  ex->callback([&] { run = [&] { return cmd_expand(ex_x, ex_n); }; });

  std::string rn_x, rn_R = "1e6";
  std::size_t rn_N = 0;
  auto* rn = app.add_subcommand("renewal", "renewal index n_R of a decimal");
  rn->add_option("x", rn_x, "decimal in (0,1), read exactly")->required();
  rn->add_option("--R", rn_R, "threshold(s), comma separated")->capture_default_str();
  rn->add_option("--N", rn_N, "trailing digits to report")->capture_default_str();
  rn->callback([&] { run = [&] { return cmd_renewal(rn_x, rn_R, rn_N); }; });

  simulate_args sim;
  auto* sc = app.add_subcommand("simulate", "empirical law of (q_{n_R}/R, trailing digits)");
  sc->add_option("--R", sim.R, "threshold(s), comma separated")->capture_default_str();
  sc->add_option("--M", sim.M, "samples per R")->capture_default_str();
  sc->add_option("--N", sim.N, "trailing digits tracked")->capture_default_str();
  sc->add_option("--seed", sim.seed, "default: $CFRENEW_SEED or 20260101");
  sc->add_option("--workers", sim.workers, "threads, 0 = all cores")->capture_default_str();
  sc->add_option("--bits", sim.bits, "precision ceiling")->capture_default_str();
  sc->add_option("--out", sim.out, "table file; _R<value> is appended per R when several are given");
  sc->add_option("--format", sim.format, "json or csv (default from extension)")->check(CLI::IsMember({"json", "csv"}));
  sim.edges.add(sc);
  sc->callback([&] {
    if (sc->count("--seed") == 0) sim.seed = default_seed();
    run = [&] { return cmd_simulate(sim); };
  });

  theory_args th;
  auto* tc = app.add_subcommand("theory", "limit law by quadrature");
  tc->add_option("--a", th.a, "lower ratio bound")->capture_default_str();
  tc->add_option("--b", th.b, "upper ratio bound or inf")->capture_default_str();
  tc->add_option("--N", th.N, "trailing digits")->capture_default_str();
  tc->add_option("--c", th.c, "digit constraint c_0,...,c_{N-1}");
  tc->add_option("--out", th.out, "write the full table");
  tc->add_option("--format", th.format, "json or csv (default from extension)")->check(CLI::IsMember({"json", "csv"}));
  th.edges.add(tc);
  th.quad.add(tc);
  tc->callback([&] { run = [&] { return cmd_theory(th); }; });

  std::string cmp1, cmp2, cmp_overlay;
  double cmp_threshold = 0.01;
  auto* cc = app.add_subcommand("compare", "distances between two tables");
  cc->add_option("first", cmp1)->required();
  cc->add_option("second", cmp2)->required();
  cc->add_option("--threshold", cmp_threshold)->capture_default_str();
  cc->add_option("--overlay", cmp_overlay, "plot-ready CSV with both tables");
  cc->callback([&] { run = [&] { return cmd_compare(cmp1, cmp2, cmp_threshold, cmp_overlay); }; });

  flow_args fl;
  auto* fc = app.add_subcommand("flow", "evolve a point of the special flow");
  fc->add_option("--minus", fl.minus, "alpha- as a decimal");
  fc->add_option("--plus", fl.plus, "alpha+ as a decimal");
  fc->add_option("--sample", fl.sample, "draw the base point from mu2 with this stream index");
  fc->add_option("--seed", fl.seed, "default: $CFRENEW_SEED or 20260101");
  fc->add_option("--height", fl.height, "decimal in [0, phi)")->capture_default_str();
  fc->add_option("--t", fl.t, "final time (negative runs backward)")->capture_default_str();
  fc->add_option("--steps", fl.steps, "output rows after t = 0")->capture_default_str();
  fc->add_option("--bits", fl.bits)->capture_default_str();
  fc->add_option("--out", fl.out, "CSV path, default stdout");
  fc->callback([&] {
    if (fc->count("--seed") == 0) fl.seed = default_seed();
    run = [&] { return cmd_flow(fl); };
  });

  auto* mc = app.add_subcommand("mixing", "leaf contraction and correlation decay");
  mc->require_subcommand(1);
  correlation_args co;
  auto* corr = mc->add_subcommand("correlation", "mu3(Phi_-t A cap B) - mu3(A) mu3(B) over t");
  co.A.add(corr, "a");
  co.B.add(corr, "b");
  co.B.digits = "2";
  co.B.y = "0,0.5";
  corr->add_option("--times", co.times)->capture_default_str();
  corr->add_option("--M", co.M)->capture_default_str();
  corr->add_option("--seed", co.seed, "default: $CFRENEW_SEED or 20260101");
  corr->add_option("--workers", co.workers)->capture_default_str();
  corr->add_option("--out", co.out, "CSV path, default stdout");
  corr->callback([&] {
    if (corr->count("--seed") == 0) co.seed = default_seed();
    run = [&] { return cmd_correlation(co); };
  });
  contraction_args ct;
  auto* con = mc->add_subcommand("contraction", "distance between two points of one leaf over time");
  con->add_option("--seed", ct.seed, "default: $CFRENEW_SEED or 20260101");
  con->add_option("--index", ct.index, "mu2 stream index of the base point")->capture_default_str();
  con->add_option("--t-max", ct.t_max)->capture_default_str();
  con->add_option("--dt", ct.dt)->capture_default_str();
  con->add_option("--shift", ct.shift, "offset of the second point along the leaf")->capture_default_str();
  con->add_flag("--backward", ct.backward, "unstable leaf, flowing backward");
  con->add_option("--bits", ct.bits)->capture_default_str();
  con->add_option("--out", ct.out, "CSV path, default stdout");
  con->callback([&] {
    if (con->count("--seed") == 0) ct.seed = default_seed();
    run = [&] { return cmd_contraction(ct); };
  });

  try {
    app.parse(argc, argv);
    return run();
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
