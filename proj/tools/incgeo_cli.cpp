// incgeo: command-line front end.
//
// Exit codes: 0 pass, 2 check failed, 3 invalid input.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "incgeo/bundle.hpp"
#include "incgeo/corpus.hpp"
#include "incgeo/error.hpp"
#include "incgeo/experiments.hpp"
#include "incgeo/io.hpp"
#include "incgeo/multiscale.hpp"

using nlohmann::json;
using namespace incgeo;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 2;
constexpr int kInvalid = 3;

json tube_json(const TubeParam& T) {
  return {{"a", T.a}, {"b", T.b}, {"scale_exp", T.scale.exponent()},
          {"chart", T.chart == Chart::standard ? "standard" : "vertical"}};
}

json checks_json(const std::vector<PropertyCheck>& checks) {
  json out = json::array();
  for (const auto& c : checks) {
    out.push_back({{"name", c.name}, {"measured", c.measured}, {"threshold", c.threshold}, {"pass", c.pass}});
  }
  return out;
}

json chain_json(const ScaleChain& chain) {
  json out = json::array();
  for (auto s : chain.scales()) out.push_back(s.exponent());
  return out;
}

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(out, j);
  }
}

json refinement_json(const RefinementOutcome& r) {
  json pieces = json::array();
  for (const auto& p : r.pieces) {
    pieces.push_back({{"Q", {p.Q.i(), p.Q.j()}},
                      {"points", p.config.points().size()},
                      {"tubes", p.config.tubes().size()},
                      {"M", p.config.M()},
                      {"C", p.config.C()}});
  }
  return {{"delta_exp", r.delta.exponent()},
          {"Delta_exp", r.Delta.exponent()},
          {"allowance", r.allowance},
          {"initial_union", r.initial_union},
          {"initial_M", r.initial_M},
          {"refined_points", r.refined.points().size()},
          {"refined_tubes", r.refined.tubes().size()},
          {"refined_M", r.refined.M()},
          {"coarse_points", r.coarse.points().size()},
          {"coarse_M", r.coarse.M()},
          {"cover_size", r.cover_size},
          {"product_lhs", r.product_lhs},
          {"product_rhs", r.product_rhs},
          {"checks", checks_json(r.checks)},
          {"pieces", pieces},
          {"verified", r.verified},
          {"diagnostic", r.diagnostic}};
}

ScaleChain ratio_chain(const std::string& ratio, int levels, Scale delta) {
  const Scale step = parse_scale(ratio);
  if (step.exponent() * levels != delta.exponent()) {
    throw PreconditionError("ratio^levels must equal delta (2^-" + std::to_string(delta.exponent()) + ")");
  }
  return ScaleChain::from_ratio(step.exponent(), levels);
}

// ---------------------------------------------------------------------------

int cmd_gen(const std::string& spec_path, const std::string& out) {
  PointSet P = generate_from_json(read_json_file(spec_path));
  save_point_set(out, P);
  std::cout << json{{"points", P.size()}, {"delta_exp", P.base_scale().exponent()}, {"file", out}}.dump(2)
            << '\n';
  return kPass;
}

int cmd_gen_config(const std::string& kind, int delta_exp, double s, double t,
                   std::optional<std::int64_t> M, std::uint64_t seed, const std::string& out) {
  ConfigSpec spec{delta_exp, s, t, M.value_or(default_multiplicity(s, delta_exp)), seed};
  NiceConfiguration config;
  if (kind == "random") {
    config = random_config(spec);
  } else if (kind == "product") {
    config = product_config(spec);
  } else if (kind == "collinear") {
    const auto count = std::int64_t{1} << std::max(static_cast<int>(std::floor(t * delta_exp)), 0);
    config = collinear_config(delta_exp, count, spec.M, s, seed);
  } else {
    throw PreconditionError("unknown configuration kind '" + kind + "'");
  }
  save_config(out, config);
  std::cout << json{{"points", config.points().size()}, {"tubes", config.tubes().size()},
                    {"M", config.M()}, {"C", config.C()}, {"dir", out}}
                   .dump(2)
            << '\n';
  return kPass;
}

int cmd_validate(const std::string& dir) {
  ConfigParts parts = load_config_parts(dir);
  auto problems = NiceConfiguration::problems(parts.P, parts.families, parts.s, parts.C, parts.M);
  std::cout << json{{"valid", problems.empty()}, {"problems", problems},
                    {"points", parts.P.size()}, {"M", parts.M}, {"C", parts.C}, {"s", parts.s}}
                   .dump(2)
            << '\n';
  return problems.empty() ? kPass : kFail;
}

int cmd_check(const std::string& dir, const std::string& lemma, std::optional<double> c,
              const std::string& out) {
  NiceConfiguration config = load_config(dir);
  const double constant = c.value_or(kLargeTubeConstant);
  json j;
  bool pass = false;
  if (lemma == "small") {
    auto r = check_small_tube(config);
    j = {{"lemma", "small"},        {"lhs", r.lhs},
         {"K_membership", r.K_membership}, {"K_geometric", r.K_geometric},
         {"rhs_membership", r.rhs_membership}, {"rhs_geometric", r.rhs_geometric},
         {"pass", r.pass},          {"pass_geometric", r.pass_geometric}};
    pass = r.pass;
  } else if (lemma == "large") {
    auto sum = summarize(config);
    auto r = check_large_tube(config, config.tubes()[sum.heaviest_tube], constant);
    j = {{"lemma", "large"},
         {"tube", tube_json(r.tube)},
         {"lhs", r.lhs},
         {"tube_count", r.tube_count},
         {"c", r.c},
         {"rhs", r.rhs},
         {"raw_ratio", r.raw_ratio},
         {"angle_threshold", r.angle_threshold},
         {"min_transversal", r.min_transversal},
         {"transversal_half", r.transversal_half},
         {"transversal_sum", r.transversal_sum},
         {"overlap", r.overlap},
         {"overlap_bound", r.overlap_bound},
         {"pass", r.pass}};
    pass = r.pass;
  } else if (lemma == "union") {
    auto r = check_union_bound(config, constant);
    j = {{"lemma", "union"}, {"lhs", r.lhs},     {"rhs", r.rhs},
         {"c", r.c},         {"raw_ratio", r.raw_ratio}, {"branch", r.branch},
         {"K_geometric", r.K_geometric}, {"pass", r.pass}};
    j["witness"] = r.witness ? tube_json(*r.witness) : json(nullptr);
    pass = r.pass;
  } else {
    throw PreconditionError("unknown lemma '" + lemma + "'");
  }
  emit(j, out);
  return pass ? kPass : kFail;
}

int cmd_uniformize(const std::string& in, const std::string& ratio, int levels, const std::string& out_set,
                   const std::string& out) {
  PointSet P = load_point_set(in);
  ScaleChain chain = ratio_chain(ratio, levels, P.base_scale());
  UniformSet U = uniformize(P, chain);
  if (!out_set.empty()) save_point_set(out_set, U.P);
  const double bound = uniformization_bound(levels, P.base_scale());
  const double kept = static_cast<double>(U.P.size()) / static_cast<double>(P.size());
  const bool uniform = is_uniform(U.P, chain).has_value();
  emit({{"chain", chain_json(chain)},
        {"points_in", P.size()},
        {"points_out", U.P.size()},
        {"branching", U.branching},
        {"kept_fraction", kept},
        {"bound", bound},
        {"uniform", uniform},
        {"pass", uniform && kept >= bound}},
       out);
  return uniform && kept >= bound ? kPass : kFail;
}

int cmd_refine(const std::string& dir, const std::string& Delta, double allowance, const std::string& out) {
  NiceConfiguration config = load_config(dir);
  RefineOptions opt;
  opt.allowance = allowance;
  opt.strict = false;
  RefinementOutcome r = refine_induction_on_scales(config, parse_scale(Delta), opt);
  emit(refinement_json(r), out);
  return r.verified ? kPass : kFail;
}

int cmd_decompose(const std::string& in, double epsilon, double u, std::optional<std::string> ratio,
                  std::optional<int> levels, const std::string& out) {
  PointSet P = load_point_set(in);
  const int m = P.base_scale().exponent();
  int step = 1;
  if (ratio) {
    step = parse_scale(*ratio).exponent();
  } else {
    while (step <= m && (m % step != 0 || m / step > 12)) ++step;
  }
  const int N = levels.value_or(step > 0 ? m / step : 0);
  ScaleChain chain = ratio_chain("2^-" + std::to_string(step), N, P.base_scale());
  UniformSet U = uniformize(P, chain);
  MultiscaleDecomposition D = decompose_frostman_pieces(U, epsilon, u);
  json blocks = json::array();
  for (const auto& b : D.blocks) {
    blocks.push_back({{"first", b.first},
                      {"last", b.last},
                      {"alpha", b.alpha},
                      {"log_inv_lambda", b.log_inv_lambda},
                      {"worst_local_ratio", b.worst_local_ratio},
                      {"long", b.long_block},
                      {"good", b.good}});
  }
  const bool verified = D.found && verify_decomposition(U, D);
  emit({{"chain", chain_json(chain)},
        {"points_in", P.size()},
        {"points_uniform", U.P.size()},
        {"found", D.found},
        {"reason", D.reason},
        {"epsilon", D.epsilon},
        {"u", D.u},
        {"tau", D.tau},
        {"xi", D.xi},
        {"blocks", blocks},
        {"mass_lhs", D.mass_lhs},
        {"mass_rhs", D.mass_rhs},
        {"good_lhs", D.good_lhs},
        {"good_rhs", D.good_rhs},
        {"partitions_tried", D.partitions_tried},
        {"sampling_note", D.sampling_note},
        {"verified", verified}},
       out);
  return verified ? kPass : kFail;
}

int cmd_classify(const std::string& dir, double eta, std::optional<double> t, double allowance,
                 const std::string& out) {
  NiceConfiguration config = load_config(dir);
  ClassifyOptions opt;
  opt.allowance = allowance;
  opt.t = t;
  ClassificationReport r = classify_structure(config, eta, opt);
  emit({{"classification", to_string(r.classification)},
        {"eta", r.eta},
        {"t", r.t},
        {"N", r.N},
        {"chain", chain_json(r.chain)},
        {"points_initial", r.points_initial},
        {"points_final", r.points_final},
        {"tubes_final", r.tubes_final},
        {"M", r.M},
        {"pipeline_verified", r.pipeline_verified},
        {"pipeline_diagnostic", r.pipeline_diagnostic},
        {"large_tube_max_ratio", r.large_tube_max_ratio},
        {"large_tube_threshold", r.large_tube_threshold},
        {"light_point_fraction", r.light_point_fraction},
        {"light_threshold", r.light_threshold},
        {"certified_slice_fraction", r.certified_slice_fraction},
        {"observed_ratio", r.observed_ratio}},
       out);
  return kPass;
}

int cmd_experiment(const std::string& cfg_path, std::optional<std::string> out_dir) {
  ExperimentConfig cfg = ExperimentConfig::from_json(read_json_file(cfg_path));
  const std::string dir = out_dir ? *out_dir : cfg.output.value_or("");
  if (dir.empty()) throw PreconditionError("experiment: no output directory (--out or \"output\")");
  ExperimentReport report = run_experiment(cfg);
  emit_report(report, dir);
  json j{{"kind", report.kind}, {"rows", report.rows.size()}, {"fitted_quantity", report.fitted_quantity},
         {"summary", report.summary}, {"dir", dir}};
  if (report.fit) j["fit"] = {{"slope", report.fit->slope}, {"residual", report.fit->residual}};
  std::cout << j.dump(2) << '\n';
  return kPass;
}

int cmd_calibrate(std::size_t count, std::uint64_t seed) {
  CalibrationResult r = calibrate_large_tube(count, seed);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", r.constant);
  std::cout << json{{"configs", r.configs},
                    {"min_ratio", r.min_ratio},
                    {"constant", r.constant},
                    {"constant_literal", buf},
                    {"argmin", {{"delta_exp", r.argmin.delta_exp}, {"s", r.argmin.s}, {"t", r.argmin.t},
                                {"M", r.argmin.M}, {"seed", r.argmin.seed}}}}
                   .dump(2)
            << '\n';
  return kPass;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discretized incidence geometry toolkit"};
  app.require_subcommand(1);
  std::function<int()> action;

  std::string spec_path, out, in, dir, lemma = "union", ratio, Delta, kind = "random";
  int levels = 2, delta_exp = 6;
  double s = 0.5, t = 1.0, allowance = 0.2, epsilon = 0.1, u = 0.0, eta = 0.25;
  std::optional<double> c, t_opt;
  std::optional<std::int64_t> M;
  std::optional<std::string> ratio_opt, out_opt;
  std::optional<int> levels_opt;
  std::uint64_t seed = 1;
  std::size_t count = 100;

  auto* gen = app.add_subcommand("gen", "Generate a point set from a JSON spec");
  gen->add_option("--spec", spec_path, "generator JSON")->required();
  gen->add_option("--out", out, "output set file")->required();
  gen->callback([&] { action = [&] { return cmd_gen(spec_path, out); }; });

  auto* genc = app.add_subcommand("gen-config", "Generate a nice configuration bundle");
  genc->add_option("--kind", kind, "random | product | collinear");
  genc->add_option("--delta-exp", delta_exp, "delta = 2^-k");
  genc->add_option("--s", s, "slope-set exponent");
  genc->add_option("--t", t, "point-set exponent");
  genc->add_option("--M", M, "tubes per point");
  genc->add_option("--seed", seed);
  genc->add_option("--out", out, "output directory")->required();
  genc->callback([&] { action = [&] { return cmd_gen_config(kind, delta_exp, s, t, M, seed, out); }; });

  auto* val = app.add_subcommand("validate-config", "Validate a configuration bundle");
  val->add_option("dir", dir)->required();
  val->callback([&] { action = [&] { return cmd_validate(dir); }; });

  auto* chk = app.add_subcommand("check", "Check a lower bound for the number of tubes");
  chk->add_option("dir", dir)->required();
  chk->add_option("--lemma", lemma, "large | small | union")
      ->check(CLI::IsMember({"large", "small", "union"}));
  chk->add_option("--c", c, "override the frozen constant");
  chk->add_option("--out", out, "write the JSON report here");
  chk->callback([&] { action = [&] { return cmd_check(dir, lemma, c, out); }; });

  auto* uni = app.add_subcommand("uniformize", "Extract a uniform subset");
  uni->add_option("--in", in)->required();
  uni->add_option("--ratio", ratio, "step 2^-k")->required();
  uni->add_option("--levels", levels)->required();
  uni->add_option("--out-set", spec_path, "write the uniform subset here");
  uni->add_option("--out", out, "write the JSON report here");
  uni->callback([&] { action = [&] { return cmd_uniformize(in, ratio, levels, spec_path, out); }; });

  auto* ref = app.add_subcommand("refine", "Refine a configuration at an intermediate scale");
  ref->add_option("--config", dir)->required();
  ref->add_option("--Delta", Delta, "2^-k")->required();
  ref->add_option("--allowance", allowance);
  ref->add_option("--out", out);
  ref->callback([&] { action = [&] { return cmd_refine(dir, Delta, allowance, out); }; });

  auto* dec = app.add_subcommand("decompose", "Multiscale Frostman decomposition");
  dec->add_option("--in", in)->required();
  dec->add_option("--epsilon", epsilon)->required();
  dec->add_option("--u", u)->required();
  dec->add_option("--ratio", ratio_opt, "chain step 2^-k");
  dec->add_option("--levels", levels_opt);
  dec->add_option("--out", out);
  dec->callback([&] { action = [&] { return cmd_decompose(in, epsilon, u, ratio_opt, levels_opt, out); }; });

  auto* cls = app.add_subcommand("classify", "Run the structure classification pipeline");
  cls->add_option("--config", dir)->required();
  cls->add_option("--eta", eta)->required();
  cls->add_option("--t", t_opt);
  cls->add_option("--allowance", allowance)->default_val(0.3);
  cls->add_option("--out", out);
  cls->callback([&] { action = [&] { return cmd_classify(dir, eta, t_opt, allowance, out); }; });

  auto* exp = app.add_subcommand("experiment", "Run a batch experiment");
  exp->add_option("--config", spec_path)->required();
  exp->add_option("--out", out_opt);
  exp->callback([&] { action = [&] { return cmd_experiment(spec_path, out_opt); }; });

  auto* cal = app.add_subcommand("calibrate", "Calibrate the large-tube constant");
  cal->add_option("--count", count);
  cal->add_option("--seed", seed)->default_val(20240601);
  cal->callback([&] { action = [&] { return cmd_calibrate(count, seed); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    return action();
  } catch (const VerificationError& e) {
    std::cerr << "verification failed: " << e.property() << ": " << e.what() << '\n';
    return kFail;
  } catch (const ParseError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalid;
  } catch (const GeneratorExhausted& e) {
    std::cerr << "generator exhausted: " << e.what() << '\n';
    return kFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
