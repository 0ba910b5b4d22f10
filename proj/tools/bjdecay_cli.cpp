// bjdecay: command-line front end for the block Jacobi decay toolkit.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bjdecay/bjdecay.hpp"

namespace {

using bjdecay::io::json;

struct Common {
  std::string op = "example2:x=3";
  int n = 200;
  std::string zeta = "0.5,0";
  std::string delta = "auto";
  double epsilon = 0.25;
  double eta = 0.5;
  double epsilon_prime = 0.01;
  std::string variant = "continuous";
  std::string gap = "symbol";
  std::string out;
  std::string format = "csv";
};

bjdecay::SpectralPoint parse_zeta(const std::string& s) {
  std::stringstream ss(s);
  std::string re, im;
  std::getline(ss, re, ',');
  std::getline(ss, im);
  try {
    return bjdecay::SpectralPoint(std::stod(re), im.empty() ? 0.0 : std::stod(im));
  } catch (const std::invalid_argument&) {
    throw bjdecay::SchemaError("--zeta expects re,im, got '" + s + "'");
  }
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

void emit(const Common& c, const std::string& body) {
  if (c.out.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw bjdecay::SchemaError("cannot write '" + c.out + "'");
  f << body;
}

void emit_json(const Common& c, const json& j) { emit(c, j.dump(2) + "\n"); }

bjdecay::ExperimentConfig config_from_flags(const Common& c) {
  bjdecay::ExperimentConfig cfg;
  cfg.name = "cli";
  cfg.op = bjdecay::io::load_operator(c.op);
  cfg.n = c.n;
  cfg.zetas = {parse_zeta(c.zeta)};
  if (c.delta != "auto") cfg.delta = std::stod(c.delta);
  cfg.epsilon = c.epsilon;
  cfg.eta = c.eta;
  cfg.epsilon_prime = c.epsilon_prime;
  cfg.variants = {bjdecay::parse_variant(c.variant)};
  if (c.gap == "symbol") {
    cfg.gap_source = bjdecay::GapSource::Symbol;
  } else if (c.gap == "truncation") {
    cfg.gap_source = bjdecay::GapSource::Truncation;
  } else {
    const auto g = parse_list(c.gap);
    if (g.size() != 2) throw bjdecay::SchemaError("--gap expects symbol|truncation|r,s");
    cfg.gap_source = bjdecay::GapSource::Explicit;
    cfg.explicit_gap = bjdecay::GapInterval(g[0], g[1]);
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* app, Common& c, bool with_bound) {
  app->add_option("--operator", c.op, "operator JSON file or family string, e.g. example2:x=3");
  app->add_option("--n", c.n, "number of blocks N");
  app->add_option("--zeta", c.zeta, "spectral parameter re,im");
  app->add_option("--out", c.out, "output path (default stdout)");
  app->add_option("--format", c.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  if (with_bound) {
    app->add_option("--delta", c.delta, "delta value or 'auto'");
    app->add_option("--epsilon", c.epsilon, "epsilon in (0, 1/2)");
    app->add_option("--eta", c.eta, "eta in (0, 1)");
    app->add_option("--epsilon-prime", c.epsilon_prime, "epsilon' for the simplified rate");
    app->add_option("--variant", c.variant, "continuous|discrete|simplified|commuting");
    app->add_option("--gap", c.gap, "symbol|truncation|r,s");
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace bjdecay;
  CLI::App app{"Green-matrix decay bounds for block Jacobi operators"};
  app.require_subcommand(1);
  Common c;

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of the N-block truncation or the symbol");
  add_common(spectrum, c, false);
  std::string method = "truncation";
  int grid = kSymbolGrid;
  double tol = 0.2;
  spectrum->add_option("--method", method, "truncation|symbol")->check(CLI::IsMember({"truncation", "symbol"}));
  spectrum->add_option("--grid", grid, "theta grid size for the symbol method");

  auto* gap = app.add_subcommand("gap", "spectral gaps of the truncation or the symbol");
  add_common(gap, c, false);
  gap->add_option("--method", method, "truncation|symbol")->check(CLI::IsMember({"truncation", "symbol"}));
  gap->add_option("--grid", grid, "theta grid size for the symbol method");
  gap->add_option("--tol", tol, "minimal gap length");

  auto* green = app.add_subcommand("green", "Green block norms ||G_mj(zeta)|| for one column j");
  add_common(green, c, false);
  int column = 1;
  green->add_option("--j", column, "column block j");

  auto* bound = app.add_subcommand("bound", "decay rate gamma and envelope along column j0 = 1");
  add_common(bound, c, true);

  auto* verify = app.add_subcommand("verify", "run experiments from a config file or from flags");
  add_common(verify, c, true);
  std::string config;
  unsigned threads = 0;
  verify->add_option("--config", config, "experiment config JSON");
  verify->add_option("--threads", threads, "worker threads (0: hardware)");

  auto* ex1 = app.add_subcommand("example1", "band structure of G for A_n = [[eps_n, lambda_n], [0, eps_n]]");
  add_common(ex1, c, false);
  double lambda_slope = 1.0, eps_const = 0.0;
  ex1->add_option("--lambda-slope", lambda_slope, "lambda_n = slope * n");
  ex1->add_option("--eps", eps_const, "constant eps_n");

  auto* ex2 = app.add_subcommand("example2", "transfer eigenvalues and minimal decay for A = [[1, x], [0, 1]]");
  add_common(ex2, c, false);
  double x = 3.0;
  ex2->add_option("--x", x, "coupling x");

  auto* ex3 = app.add_subcommand("example3", "monodromy splitting for A_n = (n^alpha + c_n) [[1, x], [0, 1]]");
  add_common(ex3, c, false);
  double alpha = 0.75, c1 = 0.0, c2 = 1.0, x3 = 0.0;
  int mono_n = 10000;
  ex3->add_option("--alpha", alpha);
  ex3->add_option("--c1", c1);
  ex3->add_option("--c2", c2);
  ex3->add_option("--x", x3);
  ex3->add_option("--mono-n", mono_n, "monodromy index n");

  auto* edge = app.add_subcommand("edge-study", "decay rate and gamma near the lower gap edge of example2");
  add_common(edge, c, true);
  double edge_x = 3.0;
  std::string eps_list = "1e-4,1e-3,1e-2";
  edge->add_option("--x", edge_x);
  edge->add_option("--eps", eps_list, "comma separated distances to the edge");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*spectrum || *gap) {
      SpectrumEstimate est;
      const EntrySequence seq = build_sequence(io::load_operator(c.op));
      if (method == "symbol") {
        const auto tail = seq.constant_tail();
        if (!tail) throw PreconditionError("symbol method needs a constant-entry operator");
        est = symbol_spectrum(tail->a, tail->b, grid);
      } else {
        est = truncated_spectrum(assemble_truncation(seq, c.n));
      }
      if (*spectrum) {
        if (c.format == "json") {
          emit_json(c, {{"method", method}, {"resolution", est.resolution}, {"eigenvalues", est.samples}});
        } else {
          std::string body = csv_header() + "index,eigenvalue\n";
          for (std::size_t i = 0; i < est.samples.size(); ++i)
            body += std::to_string(i + 1) + "," + fmt(est.samples[i]) + "\n";
          emit(c, body);
        }
      } else {
        const auto gaps = detect_gap(est, tol);
        if (c.format == "json") {
          json arr = json::array();
          for (const auto& g : gaps) arr.push_back(json::array({g.r(), g.s()}));
          emit_json(c, {{"method", method}, {"gaps", arr}});
        } else {
          std::string body = csv_header() + "r,s,width\n";
          for (const auto& g : gaps) body += fmt(g.r()) + "," + fmt(g.s()) + "," + fmt(g.width()) + "\n";
          emit(c, body);
        }
      }
      return 0;
    }

    if (*green) {
      const EntrySequence seq = build_sequence(io::load_operator(c.op));
      const SpectralPoint z = parse_zeta(c.zeta);
      const GreenTable t = green_block(assemble_truncation(seq, c.n), z, index_range(1, c.n), {column});
      if (c.format == "json") {
        json rows = json::array();
        for (int m = 1; m <= c.n; ++m) rows.push_back({{"m", m}, {"j", column}, {"norm_G", t.norm(m, column)}});
        emit_json(c, {{"zeta", {z.re(), z.im()}}, {"ill_conditioned", t.ill_conditioned}, {"entries", rows}});
      } else {
        std::string body = csv_header() + "m,j,re_zeta,im_zeta,norm_G\n";
        for (int m = 1; m <= c.n; ++m)
          body += std::to_string(m) + "," + std::to_string(column) + "," + fmt(z.re()) + "," + fmt(z.im()) + "," +
                  fmt(t.norm(m, column)) + "\n";
        emit(c, body);
      }
      if (t.ill_conditioned) std::cerr << "warning: J_N - zeta is ill-conditioned\n";
      return 0;
    }

    if (*bound) {
      ExperimentConfig cfg = config_from_flags(c);
      const EntrySequence seq = build_sequence(cfg.op);
      const SpectralPoint z = cfg.zetas.front();
      const HarnessVariant v = cfg.variants.front();
      if (v == HarnessVariant::Commuting) throw DomainError("bound prints scalar envelopes; use verify for commuting");
      const GapInterval g = resolve_gap(cfg, seq, z.re());
      const auto [rate, delta] = choose_rate(cfg, v, g, z, seq, cfg.n - 1);
      const ScalarEnvelope env(v, rate, delta, seq, cfg.n - 1);
      if (c.format == "json") {
        json e = json::array();
        for (int m = 1; m <= cfg.n; ++m) e.push_back(env(m, 1));
        emit_json(c, {{"gap", {g.r(), g.s()}},
                      {"gamma", rate.gamma},
                      {"branch", to_string(rate.branch)},
                      {"variant", to_string(v)},
                      {"delta", delta ? json(*delta) : json(nullptr)},
                      {"n0", env.n0() ? json(*env.n0()) : json(nullptr)},
                      {"envelope", e}});
      } else {
        std::string body = csv_header() + "# gamma=" + fmt(rate.gamma) + " branch=" + to_string(rate.branch) +
                           " delta=" + (delta ? fmt(*delta) : std::string("none")) + "\nm,j,envelope\n";
        for (int m = 1; m <= cfg.n; ++m) body += std::to_string(m) + ",1," + fmt(env(m, 1)) + "\n";
        emit(c, body);
      }
      return 0;
    }

    if (*verify) {
      RunConfig rc;
      if (!config.empty()) {
        rc = parse_run_config(io::read_json_file(config));
      } else {
        rc.experiments.push_back(config_from_flags(c));
      }
      if (!c.out.empty()) rc.output_dir = c.out;
      rc.threads = threads;
      const int status = run(rc);
      std::cout << "report: " << (std::filesystem::path(rc.output_dir) / "report.json").string()
                << (status == 0 ? " (all pass)" : " (failures)") << "\n";
      return status;
    }

    if (*ex1) {
      const EntrySequence seq = example1_sequence(ScalarRule::linear(lambda_slope, 0.0), ScalarRule::constant(eps_const));
      const SpectralPoint z = parse_zeta(c.zeta);
      const auto all = index_range(1, c.n);
      const GreenTable t = green_block(assemble_truncation(seq, c.n), z, all, all);
      double off = 0.0;
      for (int m = 1; m <= c.n; ++m)
        for (int j = 1; j <= c.n; ++j)
          if (std::abs(m - j) >= 2) off = std::max(off, t.norm(m, j));
      emit_json(c, {{"N", c.n}, {"zeta", {z.re(), z.im()}}, {"max_norm_G_offband", off}});
      return 0;
    }

    if (*ex2) {
      const SpectralPoint z = parse_zeta(c.zeta);
      const auto mu = example2_eigenvalues(x, z);
      const auto numeric = eigenvalues(transfer_matrix(example2_sequence(x), 2, z).matrix);
      json closed = json::array(), dense = json::array();
      for (const auto& m : mu) closed.push_back({m.real(), m.imag()});
      for (const auto& m : numeric) dense.push_back({m.real(), m.imag()});
      json out = {{"x", x}, {"zeta", {z.re(), z.im()}}, {"closed_form", closed}, {"transfer_eigensolve", dense}};
      if (z.im() == 0.0 && std::abs(x) > 2.0 && z.re() > 2.0 - std::abs(x) && z.re() < std::abs(x) - 2.0)
        out["min_decay_rate"] = example2_min_decay(x, z.re());
      out["norm_A"] = spectral_norm(example2_block(x));
      emit_json(c, out);
      return 0;
    }

    if (*ex3) {
      const SpectralPoint z = parse_zeta(c.zeta);
      const auto [rp, rm] = example3_rho(c1, c2, x3, z);
      const auto g = example3_gap(c1, c2, x3);
      const AsymptoticData a = monodromy_splitting(c1, c2, x3, alpha, z, mono_n);
      json rho = json::array();
      for (const auto& r : a.rho) rho.push_back({r.real(), r.imag()});
      emit_json(c, {{"predicted_rho", {{rp.real(), rp.imag()}, {rm.real(), rm.imag()}}},
                    {"gap", g ? json::array({g->r(), g->s()}) : json(nullptr)},
                    {"measured_rho", rho},
                    {"epsilon_n", a.epsilon_n},
                    {"regime", to_string(a.regime)}});
      return 0;
    }

    if (*edge) {
      ExperimentConfig cfg;
      cfg.name = "edge";
      cfg.kind = ExperimentKind::EdgeStudy;
      cfg.edge_x = edge_x;
      cfg.edge_eps = parse_list(eps_list);
      if (c.delta != "auto") cfg.delta = std::stod(c.delta);
      cfg.epsilon = c.epsilon;
      cfg.eta = c.eta;
      cfg.validate();
      const EdgeStudy s = edge_scaling_study(cfg);
      if (c.format == "json") {
        json rows = json::array();
        for (const auto& r : s.rows)
          rows.push_back({{"epsilon", r.epsilon}, {"N", r.n}, {"measured_rate", r.measured_rate}, {"gamma", r.gamma},
                          {"theoretical_rate", r.theoretical_rate}, {"C_emp", r.c_emp}});
        emit_json(c, {{"rows", rows}, {"loglog_slope_measured", s.slope_measured},
                      {"loglog_slope_gamma", s.slope_gamma}});
      } else {
        std::string body = csv_header() + "epsilon,N,measured_rate,gamma,theoretical_rate,C_emp\n";
        for (const auto& r : s.rows)
          body += fmt(r.epsilon) + "," + std::to_string(r.n) + "," + fmt(r.measured_rate) + "," + fmt(r.gamma) + "," +
                  fmt(r.theoretical_rate) + "," + fmt(r.c_emp) + "\n";
        body += "# loglog slope measured=" + fmt(s.slope_measured) + " gamma=" + fmt(s.slope_gamma) + "\n";
        emit(c, body);
      }
      return 0;
    }
  } catch (const bjdecay::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
