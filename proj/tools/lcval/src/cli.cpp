#include "lcval_cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "lcval/annotation.hpp"
#include "lcval/csv.hpp"
#include "lcval/error.hpp"
#include "lcval/grid.hpp"
#include "lcval/metrics.hpp"
#include "lcval/retrieval.hpp"
#include "lcval/sampling.hpp"
#include "lcval/service.hpp"
#include "lcval/synth.hpp"
#include "lcval_cli/config.hpp"
#include "lcval_cli/fixtures.hpp"

namespace lcval::cli {

namespace fs = std::filesystem;

namespace {

// Raised for bad flag combinations detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    csv::write_file(path, content);
  }
}

ProjectConfig load_config(const std::string& path) {
  return path.empty() ? ProjectConfig{} : load_project_config(path);
}

// NAME:GRID:SCHEME, as an inline alternative to config products.
ProductConfig parse_product_spec(const std::string& spec) {
  const auto a = spec.find(':');
  const auto b = a == std::string::npos ? a : spec.find(':', a + 1);
  if (b == std::string::npos) {
    throw UsageError("--product-spec expects NAME:GRID:SCHEME, got '" + spec + "'");
  }
  ProductConfig p;
  p.name = spec.substr(0, a);
  p.grid = spec.substr(a + 1, b - a - 1);
  p.scheme = spec.substr(b + 1);
  return p;
}

std::vector<LoadedProduct> load_products(const ProjectConfig& cfg,
                                         const std::vector<std::string>& names,
                                         const std::vector<std::string>& specs) {
  std::vector<LoadedProduct> out;
  for (const auto& s : specs) out.push_back(load_product(parse_product_spec(s)));
  if (!names.empty()) {
    for (const auto& n : names) out.push_back(load_product(cfg.product(n)));
  } else if (specs.empty()) {
    for (const auto& p : cfg.products) out.push_back(load_product(p));
  }
  if (out.empty()) throw UsageError("no products: use --config or --product-spec");
  return out;
}

std::vector<ProductRef> refs_of(const std::vector<LoadedProduct>& products) {
  std::vector<ProductRef> refs;
  for (const auto& p : products) refs.push_back({p.name, std::cref(p.grid), std::cref(p.scheme)});
  return refs;
}

std::vector<Stratum> strata_for(const LoadedProduct& product, const std::string& mode) {
  return mode == "general" ? strata_from_general(product.grid, product.scheme)
                           : strata_from_codes(product.grid);
}

Allocation allocate(const std::vector<Stratum>& strata, const SamplingConfig& s) {
  if (s.anchor) {
    if (!s.anchor_n) throw UsageError("--anchor needs --anchor-n");
    return allocate_class_anchored(strata, *s.anchor, *s.anchor_n, s.n_min);
  }
  if (!s.n_max) throw UsageError("allocation needs --n-max or --anchor/--anchor-n");
  return allocate_max_anchored(strata, *s.n_max, s.n_min);
}

std::vector<std::int64_t> ids_of(const std::vector<SamplePoint>& samples) {
  std::vector<std::int64_t> ids;
  for (const auto& s : samples) ids.push_back(s.sample_id);
  return ids;
}

std::vector<SamplePoint> read_samples(const std::string& path) {
  return parse_samples_csv(csv::read_file(path));
}

std::vector<AnnotationRecord> read_log(const std::string& path) {
  if (path.empty() || !fs::exists(path) || fs::file_size(path) == 0) return {};
  return parse_annotation_log_csv(csv::read_file(path));
}

std::vector<std::string> roster(const ProjectConfig& cfg, const std::vector<std::string>& flag) {
  auto experts = flag.empty() ? cfg.experts : flag;
  if (experts.empty()) throw UsageError("expert roster missing: use --experts or config experts");
  return experts;
}

std::string state_counts(const AnnotationStore& store) {
  std::map<WorkflowState, std::size_t> counts;
  for (const auto& s : store.samples()) ++counts[s.state];
  std::ostringstream out;
  for (auto state : {WorkflowState::kPending, WorkflowState::kPartiallyAnnotated,
                     WorkflowState::kNeedsReview, WorkflowState::kFinalized}) {
    out << to_string(state) << ": " << counts[state] << "\n";
  }
  return out.str();
}

std::vector<ClassFraction> parse_mix(const std::string& text) {
  std::vector<ClassFraction> mix;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("--mix expects CODE:FRACTION[,...]");
    mix.push_back({static_cast<int>(csv::parse_int(item.substr(0, colon), 0)),
                   csv::parse_double(item.substr(colon + 1), 0)});
  }
  return mix;
}

std::atomic<AnnotationServer*> g_server{nullptr};

extern "C" void handle_stop_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Land-cover map validation toolkit", "lcval"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  std::string config_path;
  SamplingConfig sampling;
  std::string strata_file, product_name, out_path, strata_mode, scheme_arg, grid_arg;
  std::vector<std::string> product_names, product_specs, experts;
  std::string samples_path, log_path, input_path, truth_path, retrieval_path, per_level_path;
  std::string sampling_set, out_dir, policy_name, format = "text", degrade_path, bind = "127.0.0.1";
  std::string mix_text = "1:1.0", fixtures_dir, summary_out;
  std::int64_t first_id = 0;
  int port = 8080, rows = 200, cols = 200;
  double cell_size = 20.0, blob_scale = 8.0, correct = 0.9;
  std::uint64_t degrade_seed = 1;
  bool allow_partial = false;

  auto* plan = app.add_subcommand("plan", "Sample size from z, P, h and an optional allocation");
  plan->set_help_flag("--help", "Print this help message and exit");
  plan->add_option("--config", config_path, "Project config (JSON)");
  auto* z_opt = plan->add_option("--z", sampling.z, "Critical normal value");
  auto* p_opt = plan->add_option("--P,--p", sampling.p, "Planning proportion");
  auto* h_opt = plan->add_option("--h", sampling.h, "Half-width of the confidence interval");
  plan->add_option("--strata", strata_file, "CSV stratum_id,coverage");
  plan->add_option("--product", product_name, "Config product whose grid defines the strata");
  auto* plan_mode = plan->add_option("--strata-mode", strata_mode, "code or general")
                        ->check(CLI::IsMember({"code", "general"}));
  auto* nmax_opt = plan->add_option("--n-max", sampling.n_max, "Quota of the largest stratum");
  auto* nmin_opt = plan->add_option("--n-min", sampling.n_min, "Minimum per stratum");
  auto* anchor_opt = plan->add_option("--anchor", sampling.anchor, "Anchor stratum id");
  auto* anchor_n_opt = plan->add_option("--anchor-n", sampling.anchor_n, "Anchor stratum count");
  plan->add_option("--out", out_path, "Allocation CSV (default stdout)");

  auto* sample = app.add_subcommand("sample", "Draw stratified random sample points");
  sample->add_option("--config", config_path, "Project config (JSON)");
  sample->add_option("--product", product_name, "Config product used as the stratum map");
  sample->add_option("--grid", grid_arg, "Stratum map grid file");
  sample->add_option("--scheme", scheme_arg, "Scheme file or built-in name");
  sample->add_option("--allocation", strata_file, "Allocation CSV from plan");
  auto* sample_mode = sample->add_option("--strata-mode", strata_mode, "code or general")
                          ->check(CLI::IsMember({"code", "general"}));
  auto* seed_opt = sample->add_option("--seed", sampling.seed, "Random seed");
  auto* s_nmax = sample->add_option("--n-max", sampling.n_max, "Quota of the largest stratum");
  auto* s_nmin = sample->add_option("--n-min", sampling.n_min, "Minimum per stratum");
  auto* s_anchor = sample->add_option("--anchor", sampling.anchor, "Anchor stratum id");
  auto* s_anchor_n = sample->add_option("--anchor-n", sampling.anchor_n, "Anchor count");
  sample->add_option("--first-id", first_id, "First sample id");
  sample->add_option("--out", out_path, "Sample CSV (default stdout)");

  auto* retrieve = app.add_subcommand("retrieve", "Look up product labels at sample points");
  retrieve->add_option("--config", config_path, "Project config (JSON)");
  retrieve->add_option("--samples", samples_path, "Sample CSV")->required();
  retrieve->add_option("--products", product_names, "Config products, in column order")
      ->delimiter(',');
  retrieve->add_option("--product-spec", product_specs, "NAME:GRID:SCHEME (repeatable)");
  retrieve->add_option("--policy", policy_name, "strict or unclassified");
  retrieve->add_option("--out", out_path, "Retrieval CSV (default stdout)");

  auto* serve = app.add_subcommand("serve", "Serve the annotation HTTP API");
  serve->add_option("--config", config_path, "Project config (JSON)");
  serve->add_option("--samples", samples_path, "Sample CSV")->required();
  serve->add_option("--log", log_path, "Annotation log CSV (replayed, then appended)")->required();
  serve->add_option("--experts", experts, "Two expert ids")->delimiter(',');
  serve->add_option("--products", product_names, "Config products for patches")->delimiter(',');
  serve->add_option("--product-spec", product_specs, "NAME:GRID:SCHEME (repeatable)");
  serve->add_option("--policy", policy_name, "strict or unclassified");
  serve->add_option("--port", port, "TCP port (0 picks a free one)");
  serve->add_option("--bind", bind, "Bind address");

  auto* import = app.add_subcommand("import-annotations", "Validate and append annotation records");
  import->add_option("--config", config_path, "Project config (JSON)");
  import->add_option("--samples", samples_path, "Sample CSV")->required();
  import->add_option("--experts", experts, "Two expert ids")->delimiter(',');
  import->add_option("--input", input_path, "Annotation records to import")->required();
  import->add_option("--log", log_path, "Store log CSV, created or extended")->required();

  auto* export_gt = app.add_subcommand("export-gt", "Export the finalized ground truth");
  export_gt->add_option("--config", config_path, "Project config (JSON)");
  export_gt->add_option("--samples", samples_path, "Sample CSV")->required();
  export_gt->add_option("--experts", experts, "Two expert ids")->delimiter(',');
  export_gt->add_option("--log", log_path, "Store log CSV")->required();
  export_gt->add_flag("--allow-partial", allow_partial, "Skip samples that are not finalized");
  export_gt->add_option("--out", out_path, "Ground-truth CSV (default stdout)");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Accuracy report for one product");
  evaluate_cmd->add_option("--config", config_path, "Project config (JSON)");
  evaluate_cmd->add_option("--truth", truth_path, "Ground-truth CSV");
  evaluate_cmd->add_option("--retrieval", retrieval_path, "Retrieval CSV");
  evaluate_cmd->add_option("--per-level", per_level_path, "CSV level,n,accuracy");
  evaluate_cmd->add_option("--product", product_name, "Product name")->required();
  evaluate_cmd->add_option("--sampling-set", sampling_set, "Sampling set label");
  evaluate_cmd->add_option("--format", format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));
  evaluate_cmd->add_option("--out-dir", out_dir, "Also write report files here");

  auto* synth = app.add_subcommand("synth", "Synthetic truth landscape and degraded map");
  synth->add_option("--seed", sampling.seed, "Landscape seed");
  synth->add_option("--rows", rows, "Rows")->check(CLI::PositiveNumber);
  synth->add_option("--cols", cols, "Columns")->check(CLI::PositiveNumber);
  synth->add_option("--cell-size", cell_size, "Cell size in meters")->check(CLI::PositiveNumber);
  synth->add_option("--mix", mix_text, "CODE:FRACTION,... class mix");
  synth->add_option("--blob-scale", blob_scale, "Typical blob side in cells");
  synth->add_option("--degrade", degrade_path, "Degradation spec (JSON)");
  synth->add_option("--correct", correct, "Diagonal probability when no spec is given");
  synth->add_option("--degrade-seed", degrade_seed, "Degradation seed");
  synth->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* reproduce = app.add_subcommand("reproduce-paper", "Check the reference-table fixtures");
  reproduce->add_option("--fixtures", fixtures_dir, "Fixture directory");
  reproduce->add_option("--summary-out", summary_out, "Write the weighted-OA summary CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    ProjectConfig cfg = load_config(config_path);
    // Flags override the config document.
    auto merge = [&](CLI::Option* opt, auto& field, const auto& value) {
      if (opt->count() > 0) field = value;
    };
    const SamplingConfig flags = sampling;
    SamplingConfig& s = cfg.sampling;
    if (!policy_name.empty()) cfg.policy = parse_policy(policy_name);

    if (*plan) {
      merge(z_opt, s.z, flags.z);
      merge(p_opt, s.p, flags.p);
      merge(h_opt, s.h, flags.h);
      merge(nmax_opt, s.n_max, flags.n_max);
      merge(nmin_opt, s.n_min, flags.n_min);
      merge(anchor_opt, s.anchor, flags.anchor);
      merge(anchor_n_opt, s.anchor_n, flags.anchor_n);
      merge(plan_mode, s.strata, strata_mode);
      const auto result = required_sample_size(s.z, s.p, s.h);
      out << "z=" << csv::format_double(result.z) << " P=" << csv::format_double(result.p)
          << " h=" << csv::format_double(result.half_width) << "\n";
      out << "n=" << result.n << "\n";
      std::optional<std::vector<Stratum>> strata;
      if (!strata_file.empty()) {
        strata = parse_strata_csv(csv::read_file(strata_file));
      } else if (!product_name.empty()) {
        strata = strata_for(load_product(cfg.product(product_name)), s.strata);
      }
      if (strata) emit(out_path, write_allocation_csv(allocate(*strata, s)), out);
      return kExitOk;
    }

    if (*sample) {
      merge(seed_opt, s.seed, flags.seed);
      merge(s_nmax, s.n_max, flags.n_max);
      merge(s_nmin, s.n_min, flags.n_min);
      merge(s_anchor, s.anchor, flags.anchor);
      merge(s_anchor_n, s.anchor_n, flags.anchor_n);
      merge(sample_mode, s.strata, strata_mode);
      std::optional<LoadedProduct> product;
      if (!grid_arg.empty()) {
        ProductConfig pc;
        pc.name = product_name.empty() ? fs::path(grid_arg).stem().string() : product_name;
        pc.grid = grid_arg;
        pc.scheme = scheme_arg;
        if (scheme_arg.empty() && s.strata == "general") {
          throw UsageError("--strata-mode general needs --scheme");
        }
        product = pc.scheme.empty()
                      ? LoadedProduct{pc.name, read_grid_file(grid_arg), ClassScheme(pc.name)}
                      : load_product(pc);
      } else {
        const std::string name = product_name.empty() ? s.source_product : product_name;
        if (name.empty()) throw UsageError("sample needs --grid or --product");
        product = load_product(cfg.product(name));
      }
      const Allocation alloc = strata_file.empty()
                                   ? allocate(strata_for(*product, s.strata), s)
                                   : parse_allocation_csv(csv::read_file(strata_file));
      const auto membership = s.strata == "general"
                                  ? membership_by_general(alloc, product->scheme)
                                  : membership_by_code(alloc);
      const auto points =
          draw_points(product->grid, alloc, membership, s.seed, product->name, first_id);
      emit(out_path, write_samples_csv(points), out);
      return kExitOk;
    }

    if (*retrieve) {
      const auto samples = read_samples(samples_path);
      const auto products = load_products(cfg, product_names, product_specs);
      const auto table = retrieve_labels(samples, refs_of(products), cfg.policy);
      emit(out_path, write_retrieval_csv(table), out);
      return kExitOk;
    }

    if (*serve) {
      auto samples = read_samples(samples_path);
      const auto team = roster(cfg, experts);
      std::vector<LoadedProduct> products;
      if (!product_specs.empty() || !product_names.empty() || !cfg.products.empty()) {
        products = load_products(cfg, product_names, product_specs);
      }
      if (policy_name.empty() && config_path.empty()) cfg.policy = ExtentPolicy::kUnclassified;
      ConcurrentAnnotationStore store(
          AnnotationStore::replay(ids_of(samples), team, read_log(log_path)), fs::path(log_path));
      AnnotationServer server(store, std::move(samples), refs_of(products), cfg.policy);
      const int bound = server.bind(bind, port);
      out << "serving on http://" << bind << ":" << bound << "\n" << std::flush;
      g_server.store(&server);
      auto previous_int = std::signal(SIGINT, handle_stop_signal);
      auto previous_term = std::signal(SIGTERM, handle_stop_signal);
      server.listen();
      std::signal(SIGINT, previous_int);
      std::signal(SIGTERM, previous_term);
      g_server.store(nullptr);
      return kExitOk;
    }

    if (*import) {
      const auto samples = read_samples(samples_path);
      auto store = AnnotationStore::replay(ids_of(samples), roster(cfg, experts), read_log(log_path));
      const auto incoming = parse_annotation_log_csv(csv::read_file(input_path));
      for (const auto& r : incoming) store.record_annotation(r);
      csv::write_file(log_path, write_annotation_log_csv(store.log()));
      out << "imported " << incoming.size() << " records\n" << state_counts(store);
      return kExitOk;
    }

    if (*export_gt) {
      const auto samples = read_samples(samples_path);
      const auto store =
          AnnotationStore::replay(ids_of(samples), roster(cfg, experts), read_log(log_path));
      const auto truth = store.export_ground_truth(allow_partial);
      emit(out_path, write_ground_truth_csv(truth), out);
      const auto counts = truth.level_counts();
      std::ostream& info = out_path.empty() || out_path == "-" ? err : out;
      for (auto level : kConfidenceLevels) {
        info << "level " << level_number(level) << ": " << counts[level_index(level)] << "\n";
      }
      return kExitOk;
    }

    if (*evaluate_cmd) {
      const auto weighting = cfg.weighting();
      std::string text;
      std::string json;
      if (!per_level_path.empty()) {
        if (!truth_path.empty() || !retrieval_path.empty()) {
          throw UsageError("--per-level excludes --truth and --retrieval");
        }
        const LevelSummary summary{product_name, sampling_set,
                                   parse_per_level_csv(csv::read_file(per_level_path))};
        text = render_level_summary_text(summary, weighting);
        json = render_level_summary_json(summary, weighting);
      } else {
        if (truth_path.empty() || retrieval_path.empty()) {
          throw UsageError("evaluate needs --truth and --retrieval, or --per-level");
        }
        const auto truth = parse_ground_truth_csv(csv::read_file(truth_path));
        const auto table = parse_retrieval_csv(csv::read_file(retrieval_path));
        const auto report = evaluate(truth, table, product_name, weighting, sampling_set);
        text = render_report_text(report);
        json = render_report_json(report);
      }
      out << (format == "json" ? json : text);
      if (!out_dir.empty()) {
        const std::string stem =
            product_name + (sampling_set.empty() ? "" : "_" + sampling_set) + "_report";
        csv::write_file(fs::path(out_dir) / (stem + ".txt"), text);
        if (!json.empty()) csv::write_file(fs::path(out_dir) / (stem + ".json"), json);
      }
      return kExitOk;
    }

    if (*synth) {
      const auto mix = parse_mix(mix_text);
      const RasterGrid truth =
          generate_landscape(sampling.seed, rows, cols, cell_size, mix, blob_scale);
      DegradationSpec spec;
      if (!degrade_path.empty()) {
        spec = parse_degradation_spec(csv::read_file(degrade_path));
      } else {
        std::vector<int> classes;
        for (const auto& m : mix) classes.push_back(m.code);
        spec = DegradationSpec::uniform(classes, correct);
      }
      const RasterGrid map = degrade(truth, spec, degrade_seed);
      write_grid_file(fs::path(out_dir) / "truth.asc", truth);
      write_grid_file(fs::path(out_dir) / "map.asc", map);
      out << "wrote " << (fs::path(out_dir) / "truth.asc").string() << " and "
          << (fs::path(out_dir) / "map.asc").string() << "\n";
      return kExitOk;
    }

    if (*reproduce) {
      const fs::path dir = fixtures_dir.empty() ? data_dir() / "fixtures" : fs::path(fixtures_dir);
      const auto checks = run_fixture_suite(dir);
      const bool ok = print_fixture_report(checks, out);
      if (!summary_out.empty()) csv::write_file(summary_out, fixture_summary_csv(dir));
      out << (ok ? "all fixture checks passed\n" : "fixture checks failed\n");
      return ok ? kExitOk : kExitData;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace lcval::cli
