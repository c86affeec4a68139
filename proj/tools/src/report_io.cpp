#include "relate_cli/report_io.hpp"

#include "relate/error.hpp"

namespace relate::cli {
namespace {

template <typename T>
T field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw SchemaError(std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(std::string("field '") + name + "' has the wrong type");
  }
}

}  // namespace

Json model_to_json(const SubstitutionModel& model) {
  Json j;
  j["states"] = model.states;
  j["freqs"] = model.freqs;
  j["mu"] = model.mu;
  j["p_inv"] = model.p_inv;
  j["gamma_shape"] = model.gamma_shape ? Json(*model.gamma_shape) : Json(nullptr);
  j["rates"] = model.rates;
  return j;
}

SubstitutionModel model_from_json(const Json& j) {
  const auto states = field<std::string>(j, "states");
  const auto freqs = field<std::vector<double>>(j, "freqs");
  const auto p_inv = field<double>(j, "p_inv");
  std::optional<double> shape;
  if (j.contains("gamma_shape") && !j.at("gamma_shape").is_null()) shape = field<double>(j, "gamma_shape");
  std::size_t cats = 2;
  if (j.contains("rates")) cats = std::max<std::size_t>(field<std::vector<double>>(j, "rates").size(), 1);
  if (freqs.size() != states.size()) throw SchemaError("freqs and states differ in length");
  return make_model(states, freqs, p_inv, shape, cats);
}

Json fit_to_json(const MlFit& fit) {
  Json j;
  j["schema"] = kFitSchema;
  j["tree"] = write_newick(fit.tree);
  j["log_likelihood"] = fit.log_likelihood;
  j["p_inv"] = fit.model.p_inv;
  j["model"] = model_to_json(fit.model);
  Json trace = Json::array();
  for (const auto& t : fit.search_trace) trace.push_back({{"round", t.round}, {"log_likelihood", t.log_likelihood}});
  j["trace"] = trace;
  return j;
}

MlFit fit_from_json(const Json& j) {
  if (field<std::string>(j, "schema") != kFitSchema) throw SchemaError("not a fit report");
  MlFit fit;
  fit.tree = parse_newick(field<std::string>(j, "tree"));
  if (!j.contains("model")) throw SchemaError("missing field 'model'");
  fit.model = model_from_json(j.at("model"));
  fit.log_likelihood = field<double>(j, "log_likelihood");
  if (j.contains("trace"))
    for (const auto& t : j.at("trace")) fit.search_trace.push_back({field<int>(t, "round"), field<double>(t, "log_likelihood")});
  return fit;
}

Json search_to_json(const SearchConfig& cfg) {
  return {{"seed", cfg.seed},
          {"max_nni_rounds", cfg.max_nni_rounds},
          {"bl_tolerance", cfg.bl_tolerance},
          {"ll_tolerance", cfg.ll_tolerance},
          {"random_restarts", cfg.random_restarts},
          {"max_bl_sweeps", cfg.max_bl_sweeps}};
}

Json lrt_to_json(const LrtReport& report) {
  Json j;
  j["schema"] = kLrtSchema;
  const auto& c = report.config;
  j["config"] = {{"p_inv_null", c.p_inv_null}, {"p_inv_alt", c.p_inv_alt}, {"k", c.k},
                 {"alpha", c.alpha},           {"seed", c.seed},           {"search", search_to_json(c.search)}};
  Json runs = Json::array();
  for (const auto& r : report.runs) {
    runs.push_back({{"j", r.j},
                    {"seed", r.seed},
                    {"delta_obs", r.delta_observed},
                    {"delta_null", r.delta_null},
                    {"log_likelihood_null", r.fit_null.log_likelihood},
                    {"log_likelihood_alt", r.fit_alt.log_likelihood},
                    {"replicate_log_likelihood_null", r.replicate_ll_null},
                    {"replicate_log_likelihood_alt", r.replicate_ll_alt},
                    {"tree_null", write_newick(r.fit_null.tree)},
                    {"tree_alt", write_newick(r.fit_alt.tree)}});
  }
  j["runs"] = runs;
  j["mean_delta_obs"] = report.mean_observed;
  // JSON has no infinity; a degenerate t is written as null.
  j["t"] = std::isfinite(report.t_statistic) ? Json(report.t_statistic) : Json(nullptr);
  j["p"] = report.p_value;
  j["decision"] = to_string(report.decision);
  return j;
}

Json merge_tree_to_json(const MergeTree& tree, WordMetric::Kind metric, int n_perm, std::uint64_t seed) {
  Json j;
  j["schema"] = kPermSchema;
  j["config"] = {{"metric", metric_name(metric)}, {"n_perm", n_perm}, {"seed", seed}, {"alpha", tree.alpha}};
  Json merges = Json::array();
  for (const auto& m : tree.merges) {
    merges.push_back({{"a", m.a},
                      {"b", m.b},
                      {"d_hat", m.stats.d_hat},
                      {"mean_permuted", m.stats.mean_permuted},
                      {"s_hat", m.stats.s_hat},
                      {"s_undefined", m.stats.s_undefined},
                      {"p_value", m.stats.p_value}});
  }
  j["merges"] = merges;
  const auto& root = tree.merges.back();
  j["root"] = {{"s_hat", root.stats.s_hat}, {"p_value", root.stats.p_value}};
  j["decision"] = tree.related() ? "RELATED" : "NOT_SUPPORTED";
  return j;
}

Json quartet_to_json(const QuartetScore& score) {
  return {{"schema", kGqdSchema},
          {"resolved_gold", score.resolved_gold},
          {"differing", score.differing},
          {"gqd", score.gqd},
          {"no_resolved_quartets", score.no_resolved_quartets}};
}

}  // namespace relate::cli
