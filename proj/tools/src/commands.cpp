#include "relate_cli/commands.hpp"

#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "relate/bootsim.hpp"
#include "relate/error.hpp"
#include "relate/lexdata.hpp"
#include "relate/lrt.hpp"
#include "relate/msa.hpp"
#include "relate/parallel.hpp"
#include "relate/permtest.hpp"
#include "relate/random.hpp"
#include "relate/treecmp.hpp"
#include "relate_cli/manifest.hpp"
#include "relate_cli/report_io.hpp"

namespace relate::cli {
namespace {

struct InputOptions {
  std::string wordlist;
  std::string matrix;
  std::string alphabet;
  bool no_filter = false;
  std::size_t min_consonants = 2;
};

struct Common {
  std::uint64_t seed = 42;
  unsigned threads = 0;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool out_required = true) {
  app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app->add_option("--threads", c.threads, "Worker threads (0: RELATE_THREADS or all cores)")->capture_default_str();
  auto* out = app->add_option("--out", c.out, "Output file");
  if (out_required) out->required();
}

void add_inputs(CLI::App* app, InputOptions& in, bool allow_matrix) {
  auto* wl = app->add_option("--wordlist", in.wordlist, "Wordlist TSV (LANGUAGE, CONCEPT, FORM, ...)");
  if (allow_matrix) {
    auto* mx = app->add_option("--matrix", in.matrix, "Character matrix (PHYLIP or FASTA) instead of a wordlist");
    wl->excludes(mx);
    mx->excludes(wl);
  } else {
    wl->required();
  }
  app->add_option("--alphabet", in.alphabet, "Segment-to-class mapping TSV (SEGMENT, CLASS)");
  app->add_flag("--no-filter", in.no_filter, "Keep loans, flagged forms and short words");
  app->add_option("--min-consonants", in.min_consonants, "Drop forms with fewer consonant classes")
      ->capture_default_str();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return in;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << content;
  if (!out.flush()) throw Error("write failed for " + path);
}

void write_json(const std::string& path, Json payload, RunManifest& manifest) {
  manifest.finished = utc_now();
  payload["manifest"] = manifest.to_json();
  write_file(path, payload.dump(2) + "\n");
}

// Non-JSON outputs carry their manifest next to them.
void write_with_sidecar(const std::string& path, const std::string& content, RunManifest& manifest) {
  write_file(path, content);
  manifest.finished = utc_now();
  write_file(path + ".manifest.json", manifest.to_json().dump(2) + "\n");
}

ClassAlphabet load_alphabet(const InputOptions& in, RunManifest& manifest) {
  if (in.alphabet.empty()) return ClassAlphabet::dolgopolsky();
  auto file = open_input(in.alphabet);
  manifest.add_input(in.alphabet);
  return ClassAlphabet::from_tsv(file);
}

Wordlist load_wordlist(const InputOptions& in, const ClassAlphabet& alphabet, std::uint64_t seed,
                       RunManifest& manifest) {
  auto file = open_input(in.wordlist);
  manifest.add_input(in.wordlist);
  Wordlist wl = parse_wordlist(file);
  FilterPolicy policy = in.no_filter ? FilterPolicy::keep_all() : FilterPolicy{};
  policy.min_consonants = in.min_consonants;
  return select_core_form(filter_forms(wl, policy, alphabet), seed);
}

CharacterMatrix load_matrix(const InputOptions& in, const ClassAlphabet& alphabet, std::uint64_t seed,
                            unsigned threads, RunManifest& manifest) {
  if (!in.matrix.empty()) {
    auto file = open_input(in.matrix);
    manifest.add_input(in.matrix);
    return read_matrix(file);
  }
  if (in.wordlist.empty()) throw Error("one of --wordlist or --matrix is required");
  return build_character_matrix(load_wordlist(in, alphabet, seed, manifest), alphabet, {}, threads);
}

Json inputs_json(const InputOptions& in) {
  return {{"wordlist", in.wordlist},
          {"matrix", in.matrix},
          {"alphabet", in.alphabet},
          {"no_filter", in.no_filter},
          {"min_consonants", in.min_consonants}};
}

RunManifest start_manifest(const std::string& command, const Common& c) {
  RunManifest m;
  m.command = command;
  m.seed = c.seed;
  m.started = utc_now();
  return m;
}

std::string format_double(double v) { return Json(v).dump(); }

// ---------------------------------------------------------------- commands

struct LrtArgs {
  InputOptions in;
  Common common;
  double p0 = 0.01, pa = 0.06, alpha = 0.05;
  int k = 15;
  int restarts = 1;
  std::string trees;
};

int cmd_lrt(const LrtArgs& a, std::ostream& out) {
  RunManifest manifest = start_manifest("lrt", a.common);
  const unsigned threads = resolve_threads(a.common.threads);
  const ClassAlphabet alphabet = load_alphabet(a.in, manifest);
  const CharacterMatrix matrix = load_matrix(a.in, alphabet, a.common.seed, threads, manifest);

  LrtConfig cfg;
  cfg.p_inv_null = a.p0;
  cfg.p_inv_alt = a.pa;
  cfg.k = a.k;
  cfg.alpha = a.alpha;
  cfg.seed = a.common.seed;
  cfg.search.seed = a.common.seed;
  cfg.search.random_restarts = a.restarts;
  cfg.model.states = alphabet.classes();
  cfg.threads = threads;
  manifest.config = {{"inputs", inputs_json(a.in)}, {"p0", a.p0},     {"pa", a.pa},
                     {"k", a.k},                    {"alpha", a.alpha}, {"restarts", a.restarts},
                     {"trees", a.trees}};

  const LrtReport report = run_lrt(matrix, cfg);
  write_json(a.common.out, lrt_to_json(report), manifest);
  if (!a.trees.empty()) {
    std::ostringstream nwk;
    for (const auto& r : report.runs) {
      nwk << "[run=" << r.j << " hypothesis=null]" << write_newick(r.fit_null.tree) << '\n';
      nwk << "[run=" << r.j << " hypothesis=alt]" << write_newick(r.fit_alt.tree) << '\n';
    }
    write_with_sidecar(a.trees, nwk.str(), manifest);
  }
  out << "decision=" << to_string(report.decision) << " mean_delta=" << format_double(report.mean_observed)
      << " p=" << format_double(report.p_value) << '\n';
  return kOk;
}

struct PermArgs {
  InputOptions in;
  Common common;
  std::string metric = "p1dolgo";
  std::string external;
  int n_perm = 1000;
  std::string pairwise;
};

int cmd_permtest(const PermArgs& a, std::ostream& out) {
  RunManifest manifest = start_manifest("permtest", a.common);
  const unsigned threads = resolve_threads(a.common.threads);
  const ClassAlphabet alphabet = load_alphabet(a.in, manifest);
  const auto kind = parse_metric(a.metric);
  if (!kind) throw Error("unknown metric " + a.metric);
  WordMetric metric{*kind, nullptr};
  if (*kind == WordMetric::Kind::External) {
    if (a.external.empty()) throw Error("--metric external needs --external-table");
    auto file = open_input(a.external);
    manifest.add_input(a.external);
    metric = WordMetric::from_table(ExternalDistances::from_tsv(file));
  }
  const WordTable table = build_word_table(load_wordlist(a.in, alphabet, a.common.seed, manifest), alphabet);
  manifest.config = {{"inputs", inputs_json(a.in)}, {"metric", metric_name(*kind)}, {"external_table", a.external},
                     {"n_perm", a.n_perm},          {"pairwise", a.pairwise}};

  const MergeTree tree = run_permtest(metric, table, a.n_perm, a.common.seed, threads);
  write_json(a.common.out, merge_tree_to_json(tree, *kind, a.n_perm, a.common.seed), manifest);
  if (!a.pairwise.empty()) {
    std::ostringstream tsv;
    write_pairwise_tsv(tsv, table.languages,
                       pairwise_pvalues(metric, table, a.n_perm, derive_seed(a.common.seed, 0x9a1), threads));
    write_with_sidecar(a.pairwise, tsv.str(), manifest);
  }
  const auto& root = tree.merges.back();
  out << "decision=" << (tree.related() ? "RELATED" : "NOT_SUPPORTED") << " s_hat=" << format_double(root.stats.s_hat)
      << " p=" << format_double(root.stats.p_value) << '\n';
  return kOk;
}

struct MlArgs {
  InputOptions in;
  Common common;
  bool gamma2 = false;
  std::optional<double> p_inv;
  int restarts = 1;
  std::string fit_out;
};

int cmd_mltree(const MlArgs& a, std::ostream& out) {
  RunManifest manifest = start_manifest("mltree", a.common);
  const unsigned threads = resolve_threads(a.common.threads);
  const ClassAlphabet alphabet = load_alphabet(a.in, manifest);
  const CharacterMatrix matrix = load_matrix(a.in, alphabet, a.common.seed, threads, manifest);

  MlOptions options;
  options.model.states = alphabet.classes();
  options.estimate_p_inv = !a.p_inv;
  options.model.p_inv = a.p_inv.value_or(0.0);
  if (a.gamma2) {
    options.estimate_gamma = true;
    options.model.gamma_shape = 1.0;
    options.model.n_rate_cats = 2;
  }
  SearchConfig search;
  search.seed = a.common.seed;
  search.random_restarts = a.restarts;
  manifest.config = {{"inputs", inputs_json(a.in)},
                     {"gamma2", a.gamma2},
                     {"p_inv", a.p_inv ? Json(*a.p_inv) : Json("estimated")},
                     {"restarts", a.restarts},
                     {"fit", a.fit_out}};

  const MlFit fit = ml_tree(matrix, options, search);
  write_with_sidecar(a.common.out, write_newick(fit.tree) + "\n", manifest);
  if (!a.fit_out.empty()) write_json(a.fit_out, fit_to_json(fit), manifest);
  out << "log_likelihood=" << format_double(fit.log_likelihood) << " p_inv=" << format_double(fit.model.p_inv);
  if (fit.model.gamma_shape) out << " gamma_shape=" << format_double(*fit.model.gamma_shape);
  out << '\n';
  return kOk;
}

struct SimArgs {
  Common common;
  std::string fit;
  std::string tmpl;
  bool no_gap_mask = false;
  std::optional<std::size_t> n_sites;
  std::string format = "phylip";
};

int cmd_simulate(const SimArgs& a, std::ostream& out) {
  RunManifest manifest = start_manifest("simulate", a.common);
  auto fit_file = open_input(a.fit);
  manifest.add_input(a.fit);
  Json fit_json;
  try {
    fit_json = Json::parse(fit_file);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("fit JSON: ") + e.what(), 0);
  }
  const MlFit fit = fit_from_json(fit_json);
  auto tmpl_file = open_input(a.tmpl);
  manifest.add_input(a.tmpl);
  const CharacterMatrix tmpl = read_matrix(tmpl_file);
  manifest.config = {{"fit", a.fit},
                     {"template", a.tmpl},
                     {"gap_mask", !a.no_gap_mask},
                     {"n_sites", a.n_sites ? Json(*a.n_sites) : Json(nullptr)},
                     {"format", a.format}};

  SimConfig cfg;
  cfg.seed = a.common.seed;
  cfg.retain_gap_mask = !a.no_gap_mask;
  cfg.n_sites = a.n_sites;
  const CharacterMatrix sim = simulate_matrix(fit, tmpl, cfg);
  std::ostringstream text;
  if (a.format == "fasta")
    write_fasta(text, sim);
  else
    write_phylip(text, sim);
  write_with_sidecar(a.common.out, text.str(), manifest);
  out << "taxa=" << sim.n_taxa() << " sites=" << sim.n_sites() << '\n';
  return kOk;
}

struct MatrixArgs {
  InputOptions in;
  Common common;
  std::string format = "phylip";
};

int cmd_matrix(const MatrixArgs& a, std::ostream& out) {
  RunManifest manifest = start_manifest("matrix", a.common);
  const unsigned threads = resolve_threads(a.common.threads);
  const ClassAlphabet alphabet = load_alphabet(a.in, manifest);
  const CharacterMatrix matrix = load_matrix(a.in, alphabet, a.common.seed, threads, manifest);
  manifest.config = {{"inputs", inputs_json(a.in)}, {"format", a.format}};
  std::ostringstream text;
  if (a.format == "fasta")
    write_fasta(text, matrix);
  else
    write_phylip(text, matrix);
  write_with_sidecar(a.common.out, text.str(), manifest);
  out << "taxa=" << matrix.n_taxa() << " sites=" << matrix.n_sites() << '\n';
  return kOk;
}

struct GqdArgs {
  Common common;
  std::string predicted;
  std::string gold;
};

std::string read_all(const std::string& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_gqd(const GqdArgs& a, std::ostream& out) {
  RunManifest manifest = start_manifest("gqd", a.common);
  const Phylogeny predicted = parse_newick(read_all(a.predicted));
  manifest.add_input(a.predicted);
  const Phylogeny gold = parse_newick(read_all(a.gold));
  manifest.add_input(a.gold);
  manifest.config = {{"predicted", a.predicted}, {"gold", a.gold}};
  const QuartetScore score = gqd(predicted, gold);
  if (!a.common.out.empty()) write_json(a.common.out, quartet_to_json(score), manifest);
  out << format_double(score.gqd) << '\n';
  return kOk;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tests genetic relatedness of language groups from wordlists", "relate"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());

  LrtArgs lrt;
  auto* lrt_cmd = app.add_subcommand("lrt", "Invariant-sites likelihood ratio test with parametric bootstrap");
  add_inputs(lrt_cmd, lrt.in, true);
  add_common(lrt_cmd, lrt.common);
  lrt_cmd->add_option("--p0", lrt.p0, "Invariant proportion under the null")->capture_default_str();
  lrt_cmd->add_option("--pa", lrt.pa, "Invariant proportion under the alternative")->capture_default_str();
  lrt_cmd->add_option("--k", lrt.k, "Number of paired runs")->capture_default_str();
  lrt_cmd->add_option("--alpha", lrt.alpha, "Significance level")->capture_default_str();
  lrt_cmd->add_option("--restarts", lrt.restarts, "Search restarts per fit")->capture_default_str();
  lrt_cmd->add_option("--trees", lrt.trees, "Write the fitted trees (Newick, one per line)");

  PermArgs perm;
  auto* perm_cmd = app.add_subcommand("permtest", "Multilateral permutation test with average-linkage clustering");
  add_inputs(perm_cmd, perm.in, false);
  add_common(perm_cmd, perm.common);
  perm_cmd->add_option("--metric", perm.metric, "Word metric")
      ->check(CLI::IsMember({"p1dolgo", "turchin", "external"}, CLI::ignore_case))
      ->capture_default_str();
  perm_cmd->add_option("--external-table", perm.external, "TSV of word distances for --metric external");
  perm_cmd->add_option("--n-perm", perm.n_perm, "Permutations per test")->capture_default_str();
  perm_cmd->add_option("--pairwise", perm.pairwise, "Write a TSV of pairwise p-values");

  MlArgs ml;
  auto* ml_cmd = app.add_subcommand("mltree", "Maximum-likelihood tree with estimated invariant proportion");
  add_inputs(ml_cmd, ml.in, true);
  add_common(ml_cmd, ml.common);
  ml_cmd->add_flag("--gamma2", ml.gamma2, "Add a two-category gamma rate model");
  ml_cmd->add_option("--p-inv", ml.p_inv, "Fix the invariant proportion instead of estimating it");
  ml_cmd->add_option("--restarts", ml.restarts, "Search restarts")->capture_default_str();
  ml_cmd->add_option("--fit", ml.fit_out, "Write the fit (tree, model, trace) as JSON");

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a replicate matrix from a fit");
  add_common(sim_cmd, sim.common);
  sim_cmd->add_option("--fit", sim.fit, "Fit JSON written by mltree --fit")->required();
  sim_cmd->add_option("--template", sim.tmpl, "Template matrix (PHYLIP or FASTA)")->required();
  sim_cmd->add_flag("--no-gap-mask", sim.no_gap_mask, "Do not copy template gaps");
  sim_cmd->add_option("--n-sites", sim.n_sites, "Replicate width (needs --no-gap-mask)");
  sim_cmd->add_option("--format", sim.format, "phylip or fasta")
      ->check(CLI::IsMember({"phylip", "fasta"}))
      ->capture_default_str();

  MatrixArgs mx;
  auto* mx_cmd = app.add_subcommand("matrix", "Build the aligned character matrix from a wordlist");
  add_inputs(mx_cmd, mx.in, false);
  add_common(mx_cmd, mx.common);
  mx_cmd->add_option("--format", mx.format, "phylip or fasta")
      ->check(CLI::IsMember({"phylip", "fasta"}))
      ->capture_default_str();

  GqdArgs gq;
  auto* gqd_cmd = app.add_subcommand("gqd", "Generalized quartet distance between two Newick trees");
  gqd_cmd->add_option("predicted", gq.predicted, "Predicted tree")->required();
  gqd_cmd->add_option("gold", gq.gold, "Gold tree (multifurcations allowed)")->required();
  gqd_cmd->add_option("--out", gq.common.out, "Write the score as JSON");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kOk;
    err << app.help();
    return kInputError;
  }

  if (*lrt_cmd) return guarded(err, [&] { return cmd_lrt(lrt, out); });
  if (*perm_cmd) return guarded(err, [&] { return cmd_permtest(perm, out); });
  if (*ml_cmd) return guarded(err, [&] { return cmd_mltree(ml, out); });
  if (*sim_cmd) return guarded(err, [&] { return cmd_simulate(sim, out); });
  if (*mx_cmd) return guarded(err, [&] { return cmd_matrix(mx, out); });
  if (*gqd_cmd) return guarded(err, [&] { return cmd_gqd(gq, out); });
  return kInputError;
}

}  // namespace relate::cli
