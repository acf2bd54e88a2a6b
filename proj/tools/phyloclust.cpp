// phyloclust command-line driver.

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "phyloclust.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace phyloclust;

namespace {

constexpr const char* kVersion = "0.1.0";

// --config file: a JSON object whose keys are long option names; nested objects hold subcommand options.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw CLI::ConversionError("config is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    walk(doc, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void walk(const json& obj, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        walk(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array())
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      else
        item.inputs.push_back(scalar(value));
      items.push_back(std::move(item));
    }
  }
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << body;
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto part : text::split(s, ','))
    if (auto t = text::trim(part); !t.empty()) out.emplace_back(t);
  return out;
}

std::vector<double> parse_grid(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& part : split_list(s)) {
    auto v = text::to_double(part);
    if (!v) throw Error(ErrorKind::InvalidArgument, std::string("bad number in ") + what + ": '" + part + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw Error(ErrorKind::EmptyList, std::string("empty ") + what);
  return out;
}

Date parse_date_flag(const std::string& s, const char* flag) {
  auto d = Date::parse(s);
  if (!d) throw Error(ErrorKind::BadDate, std::string(flag) + " '" + s + "'");
  return *d;
}

// Collects what the manifest needs while a subcommand runs.
struct Run {
  std::string subcommand;
  std::map<std::string, std::string> inputs;  // path -> sha256
  std::vector<std::string> outputs;
  json seeds = json::object();
  std::string read(const std::string& path) {
    auto body = read_file(path);
    inputs[path] = sha256_hex(body);
    return body;
  }
  void write(const fs::path& path, const std::string& body) {
    write_file(path, body);
    outputs.push_back(path.string());
  }
};

PhyloTree load_tree(Run& run, const std::string& path, const std::string& outgroup) {
  auto tree = parse_newick(run.read(path));
  if (tree.missing_lengths > 0)
    std::cerr << "warning: " << tree.missing_lengths << " branches had no length and were set to 0\n";
  if (!outgroup.empty()) tree = root_at_outgroup(tree, split_list(outgroup));
  return tree;
}

std::vector<PhyloTree> load_tree_list(Run& run, const std::string& path, const std::string& outgroup) {
  auto trees = parse_newick_list(run.read(path));
  if (!outgroup.empty()) {
    const auto og = split_list(outgroup);
    for (auto& t : trees) t = root_at_outgroup(t, og);
  }
  return trees;
}

DistanceKind parse_kind(const std::string& s) {
  if (text::iequals(s, "p")) return DistanceKind::PDistance;
  if (text::iequals(s, "k80")) return DistanceKind::K80;
  throw Error(ErrorKind::InvalidArgument, "distance kind must be p or k80");
}

DistanceMatrix load_matrix(Run& run, const std::string& path, DistanceKind kind) {
  auto body = run.read(path);
  if (body.rfind("PCDM", 0) == 0) {
    std::vector<std::string> ids;
    const fs::path sidecar = path + ".ids";
    if (fs::exists(sidecar))
      for (auto line : text::split(run.read(sidecar.string()), '\n'))
        if (auto t = text::trim(line); !t.empty()) ids.emplace_back(t);
    return distance_matrix_from_pcdm(read_pcdm(body), std::move(ids), kind);
  }
  return parse_phylip(body, kind);
}

std::string ids_sidecar(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += id + '\n';
  return out;
}

ChainConfig chain_config(std::size_t iterations, std::size_t burn_in, std::size_t thin, std::uint64_t seed) {
  ChainConfig cfg;
  cfg.iterations = iterations;
  cfg.burn_in = burn_in;
  cfg.thin = thin;
  cfg.seed = seed;
  return cfg;
}

void report_windows(const RateWindows& w) {
  if (w.within_fallback)
    std::cerr << "note: initial partition has no multi-member cluster; mu_w centred on the smallest-decile mean\n";
  if (w.between_fallback)
    std::cerr << "note: initial partition leaves no between-cluster edge; mu_b centred on the largest-decile mean\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phyloclust: transmission-cluster estimation, comparison and growth accounting"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file of option values; command-line flags take precedence");
  unsigned threads = default_threads();
  app.add_option("--threads", threads, "worker threads (env PHYLOCLUST_THREADS)")->check(CLI::PositiveNumber);
  app.set_version_flag("--version", kVersion);

  // dist
  auto* dist = app.add_subcommand("dist", "pairwise p or K80 distance matrix");
  std::string dist_align, dist_kind = "k80", dist_format = "pcdm", dist_out;
  std::optional<double> dist_cap;
  dist->add_option("--align", dist_align, "FASTA alignment")->required()->check(CLI::ExistingFile);
  dist->add_option("--distance-kind", dist_kind, "p | k80")->capture_default_str();
  dist->add_option("--cap", dist_cap, "replace undefined distances by this value");
  dist->add_option("--format", dist_format, "pcdm | phylip")->capture_default_str()->check(CLI::IsMember({"pcdm", "phylip"}));
  dist->add_option("--out", dist_out, "output matrix")->required();

  // cluster
  auto* cluster = app.add_subcommand("cluster", "partition sequences with one clustering method");
  std::string c_method, c_tree, c_align, c_matrix, c_out, c_outgroup, c_kind = "k80", c_chain_dir;
  double c_support = 0.70, c_quantile = 0.90;
  std::optional<double> c_distance, c_percentile;
  std::size_t c_iter = 220000, c_burn = 20000, c_thin = 200, c_chains = 1;
  std::uint64_t c_seed = 1;
  cluster->add_option("--method", c_method, "clusterpicker | phylopart | maxpatristic | gap | dmphyclus")
      ->required()
      ->check(CLI::IsMember({"clusterpicker", "phylopart", "maxpatristic", "gap", "dmphyclus"}));
  cluster->add_option("--tree", c_tree, "Newick tree with supports")->check(CLI::ExistingFile);
  cluster->add_option("--align", c_align, "FASTA alignment")->check(CLI::ExistingFile);
  cluster->add_option("--matrix", c_matrix, "distance matrix (PCDM or PHYLIP) for gap")->check(CLI::ExistingFile);
  cluster->add_option("--outgroup", c_outgroup, "comma-separated outgroup tips; tree is rooted there and they are dropped");
  cluster->add_option("--support-min", c_support, "minimum clade support")->capture_default_str();
  cluster->add_option("--distance-max", c_distance, "maximum within-clade statistic");
  cluster->add_option("--percentile", c_percentile, "set distance-max to this percentile of patristic distances");
  cluster->add_option("--distance-kind", c_kind, "p | k80, for gap when computing from --align")->capture_default_str();
  cluster->add_option("--gap-quantile", c_quantile, "fraction of each sorted row searched")->capture_default_str();
  cluster->add_option("--iterations", c_iter)->capture_default_str();
  cluster->add_option("--burn-in", c_burn)->capture_default_str();
  cluster->add_option("--thin", c_thin)->capture_default_str();
  cluster->add_option("--seed", c_seed)->capture_default_str();
  cluster->add_option("--chains", c_chains, "independent chains, seeds seed..seed+N-1")->capture_default_str()->check(CLI::PositiveNumber);
  cluster->add_option("--chain-dir", c_chain_dir, "where chain output goes (default: <out>.chain)");
  cluster->add_option("--out", c_out, "partition CSV")->required();

  // support
  auto* support = app.add_subcommand("support", "annotate a tree with clade frequencies from a tree sample");
  std::string s_tree, s_sample, s_outgroup, s_out;
  support->add_option("--tree", s_tree, "reference tree")->required()->check(CLI::ExistingFile);
  support->add_option("--sample", s_sample, "bootstrap or posterior trees, one per line")->required()->check(CLI::ExistingFile);
  support->add_option("--outgroup", s_outgroup, "comma-separated outgroup tips");
  support->add_option("--out", s_out, "annotated Newick")->required();

  // consensus
  auto* consensus = app.add_subcommand("consensus", "majority-rule consensus of a tree sample");
  std::string k_sample, k_outgroup, k_out;
  std::size_t k_skip = 0;
  consensus->add_option("--sample", k_sample, "trees, one per line")->required()->check(CLI::ExistingFile);
  consensus->add_option("--outgroup", k_outgroup, "comma-separated outgroup tips");
  consensus->add_option("--skip", k_skip, "drop this many leading trees (burn-in)")->capture_default_str();
  consensus->add_option("--out", k_out, "consensus Newick")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "score a grid of cutpoints against a partial gold standard");
  std::string w_tree, w_align, w_reference, w_method = "clusterpicker", w_outgroup, w_out;
  std::string w_support = "0.70,0.90,0.95", w_distance = "0.015,0.03,0.045,0.068,0.077", w_percentiles;
  sweep->add_option("--tree", w_tree)->required()->check(CLI::ExistingFile);
  sweep->add_option("--align", w_align)->check(CLI::ExistingFile);
  sweep->add_option("--reference", w_reference, "partial gold standard partition")->required()->check(CLI::ExistingFile);
  sweep->add_option("--method", w_method, "clusterpicker | phylopart | maxpatristic")
      ->capture_default_str()
      ->check(CLI::IsMember({"clusterpicker", "phylopart", "maxpatristic"}));
  sweep->add_option("--outgroup", w_outgroup);
  sweep->add_option("--support-grid", w_support)->capture_default_str();
  sweep->add_option("--distance-grid", w_distance)->capture_default_str();
  sweep->add_option("--percentiles", w_percentiles, "extra distance cutoffs from patristic percentiles, e.g. 15,30");
  sweep->add_option("--out", w_out, "sweep TSV")->required();

  // ari
  auto* ari = app.add_subcommand("ari", "adjusted Rand index between partitions");
  std::string a_partition, a_against, a_planted, a_reference, a_out;
  ari->add_option("--partition", a_partition)->required()->check(CLI::ExistingFile);
  auto* a_opt_against = ari->add_option("--against", a_against, "second partition over the same ids")->check(CLI::ExistingFile);
  auto* a_opt_planted = ari->add_option("--planted", a_planted, "simulated ground truth")->check(CLI::ExistingFile);
  auto* a_opt_ref = ari->add_option("--reference", a_reference, "partial gold standard")->check(CLI::ExistingFile);
  a_opt_against->excludes(a_opt_planted)->excludes(a_opt_ref);
  a_opt_planted->excludes(a_opt_ref);
  ari->add_option("--out", a_out, "write the value here as well as to stdout");

  // compare
  auto* compare = app.add_subcommand("compare", "cross-method ARI table, summaries and co-clustering");
  std::vector<std::string> m_partitions;
  std::string m_out_dir;
  compare->add_option("--partition", m_partitions, "NAME=FILE, repeat per method")->required();
  compare->add_option("--out-dir", m_out_dir)->required();

  // linkage
  auto* linkage = app.add_subcommand("linkage", "walktrap communities on a chain's co-clustering matrix");
  std::string l_chain_dir, l_out;
  std::size_t l_walk = 4;
  linkage->add_option("--chain-dir", l_chain_dir)->required()->check(CLI::ExistingDirectory);
  linkage->add_option("--walk-length", l_walk)->capture_default_str()->check(CLI::PositiveNumber);
  linkage->add_option("--out", l_out, "partition CSV")->required();

  // growth
  auto* growth = app.add_subcommand("growth", "PHI-based growth lower bounds per cluster");
  std::string g_partition, g_metadata, g_out, g_svg;
  std::string g_start = "2012-01-01", g_phi = "2012-07-01", g_end = "2016-02-01";
  std::size_t g_top = 30;
  growth->add_option("--partition", g_partition)->required()->check(CLI::ExistingFile);
  growth->add_option("--metadata", g_metadata)->required()->check(CLI::ExistingFile);
  growth->add_option("--window-start", g_start)->capture_default_str();
  growth->add_option("--phi-start", g_phi)->capture_default_str();
  growth->add_option("--window-end", g_end)->capture_default_str();
  growth->add_option("--top-k", g_top, "0 reports every cluster")->capture_default_str();
  growth->add_option("--out", g_out, "report TSV")->required();
  growth->add_option("--svg", g_svg, "bar chart");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "planted-cluster tree, alignment and metadata");
  std::string x_preset = "acceptance", x_out_dir;
  std::uint64_t x_seed = 1;
  std::optional<double> x_mask, x_phi;
  simulate->add_option("--preset", x_preset, "acceptance | paper-scale | small")
      ->capture_default_str()
      ->check(CLI::IsMember({"acceptance", "paper-scale", "small"}));
  simulate->add_option("--seed", x_seed)->capture_default_str();
  simulate->add_option("--mask-fraction", x_mask, "fraction of residues replaced by N");
  simulate->add_option("--phi-fraction", x_phi);
  simulate->add_option("--out-dir", x_out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto started = std::chrono::steady_clock::now();
  Run run;
  fs::path manifest_at;
  CLI::App* active = app.get_subcommands().front();
  run.subcommand = active->get_name();

  try {
    if (active == dist) {
      const auto kind = parse_kind(dist_kind);
      const auto aln = parse_fasta(run.read(dist_align));
      const auto policy = dist_cap ? SaturationPolicy::capped(*dist_cap) : SaturationPolicy::undefined();
      const auto m = build_distance_matrix(aln, kind, policy, threads);
      std::size_t undefined = 0, capped = 0;
      for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j) {
          undefined += m.definedness(i, j) == Definedness::Undefined;
          capped += m.definedness(i, j) == Definedness::Capped;
        }
      if (undefined) std::cerr << "warning: " << undefined << " pairs undefined\n";
      if (capped) std::cerr << "warning: " << capped << " pairs capped at " << *dist_cap << "\n";
      if (dist_format == "pcdm") {
        run.write(dist_out, write_pcdm(m));
        run.write(dist_out + ".ids", ids_sidecar(m.ids()));
      } else {
        run.write(dist_out, write_phylip(m));
      }
      manifest_at = dist_out;
    } else if (active == cluster) {
      Partition p;
      if (c_method == "gap") {
        DistanceMatrix d;
        if (!c_matrix.empty()) {
          d = load_matrix(run, c_matrix, parse_kind(c_kind));
        } else if (!c_align.empty()) {
          const auto aln = parse_fasta(run.read(c_align));
          d = build_distance_matrix(aln, parse_kind(c_kind), SaturationPolicy::capped(1.0), threads);
          std::size_t capped = 0;
          for (std::size_t i = 0; i < d.size(); ++i)
            for (std::size_t j = i + 1; j < d.size(); ++j) capped += d.definedness(i, j) == Definedness::Capped;
          if (capped) std::cerr << "note: " << capped << " saturated pairs capped at 1.0\n";
        } else {
          throw Error(ErrorKind::InvalidArgument, "gap needs --matrix or --align");
        }
        p = gap_cluster(d, GapConfig{c_quantile}, threads);
      } else {
        if (c_tree.empty()) throw Error(ErrorKind::InvalidArgument, "--tree is required for " + c_method);
        const auto tree = load_tree(run, c_tree, c_outgroup);
        std::optional<Alignment> aln;
        if (!c_align.empty()) aln = parse_fasta(run.read(c_align));
        if (c_method == "dmphyclus") {
          if (!aln) throw Error(ErrorKind::InvalidArgument, "dmphyclus needs --align for its initial partition");
          const fs::path dir = c_chain_dir.empty() ? fs::path(c_out + ".chain") : fs::path(c_chain_dir);
          std::vector<ChainSummary> chains(c_chains);
          std::vector<std::uint64_t> seeds;
          for (std::size_t k = 0; k < c_chains; ++k) seeds.push_back(c_seed + k);
          parallel_for(
              c_chains, threads,
              [&](std::size_t begin, std::size_t end) {
                for (std::size_t k = begin; k < end; ++k) {
                  const auto cfg = chain_config(c_iter, c_burn, c_thin, seeds[k]);
                  chains[k] = run_chain(tree, initialize_chain(tree, *aln, cfg), cfg);
                }
              },
              1);
          report_windows(chains.front().windows);
          std::size_t best = 0;
          for (std::size_t k = 0; k < c_chains; ++k) {
            const fs::path where = c_chains == 1 ? dir : dir / ("chain-" + std::to_string(k + 1));
            write_chain_dir(chains[k], where);
            run.outputs.push_back(where.string());
            std::cerr << "chain " << k + 1 << " (seed " << seeds[k] << "): MAP log posterior "
                      << text::format_double(chains[k].map_log_posterior) << " at iteration " << chains[k].map_iteration
                      << ", " << chains[k].retained_samples.size() << " retained samples\n";
            if (chains[k].map_log_posterior > chains[best].map_log_posterior) best = k;
          }
          p = chains[best].map_partition;
          run.seeds = json(seeds);
        } else {
          ClusterCriteria criteria;
          criteria.support_min = c_support;
          criteria.statistic = c_method == "clusterpicker" ? DistanceStatistic::MaxPairwiseP
                               : c_method == "phylopart"   ? DistanceStatistic::MedianPatristic
                                                           : DistanceStatistic::MaxPatristic;
          if (c_percentile) {
            criteria.distance_max = percentile_cutoff(tree, *c_percentile);
            std::cerr << "note: percentile " << *c_percentile << " gives distance-max "
                      << text::format_double(criteria.distance_max) << "\n";
          } else if (c_distance) {
            criteria.distance_max = *c_distance;
          } else {
            throw Error(ErrorKind::InvalidArgument, "give --distance-max or --percentile");
          }
          if (criteria.statistic == DistanceStatistic::MaxPairwiseP && !aln)
            throw Error(ErrorKind::InvalidArgument, "clusterpicker needs --align");
          p = threshold_cluster(tree, aln ? &*aln : nullptr, criteria, threads);
        }
      }
      run.write(c_out, write_partition(p));
      std::cerr << p.size() << " sequences in " << p.cluster_count() << " clusters\n";
      manifest_at = c_out;
    } else if (active == support) {
      const auto ref = load_tree(run, s_tree, s_outgroup);
      const auto sample = load_tree_list(run, s_sample, s_outgroup);
      run.write(s_out, write_newick(annotate_support(ref, sample, threads)) + "\n");
      manifest_at = s_out;
    } else if (active == consensus) {
      auto sample = load_tree_list(run, k_sample, k_outgroup);
      if (k_skip >= sample.size()) throw Error(ErrorKind::EmptyList, "--skip removes every tree");
      sample.erase(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(k_skip));
      run.write(k_out, write_newick(majority_consensus(sample)) + "\n");
      manifest_at = k_out;
    } else if (active == sweep) {
      const auto tree = load_tree(run, w_tree, w_outgroup);
      std::optional<Alignment> aln;
      if (!w_align.empty()) aln = parse_fasta(run.read(w_align));
      const auto statistic = w_method == "clusterpicker" ? DistanceStatistic::MaxPairwiseP
                             : w_method == "phylopart"   ? DistanceStatistic::MedianPatristic
                                                         : DistanceStatistic::MaxPatristic;
      if (statistic == DistanceStatistic::MaxPairwiseP && !aln)
        throw Error(ErrorKind::InvalidArgument, "clusterpicker sweep needs --align");
      auto distances = parse_grid(w_distance, "--distance-grid");
      if (!w_percentiles.empty())
        for (double pct : parse_grid(w_percentiles, "--percentiles")) distances.push_back(percentile_cutoff(tree, pct));
      const auto supports = parse_grid(w_support, "--support-grid");
      ReferenceSet ref{parse_partition(run.read(w_reference)), tree.tip_labels()};
      auto stats = make_clade_statistics(tree, aln ? &*aln : nullptr, statistic, threads);
      const auto result = cutpoint_sweep([&](const ClusterCriteria& c) { return threshold_cluster(stats, c); },
                                         supports, distances, statistic, ref);
      std::string tsv = "support_min\tdistance_max\tari\tbest\n";
      for (const auto& cell : result.grid) {
        const bool is_best = cell.criteria.support_min == result.best.support_min &&
                             cell.criteria.distance_max == result.best.distance_max;
        tsv += text::format_double(cell.criteria.support_min) + '\t' + text::format_double(cell.criteria.distance_max) +
               '\t' + text::fixed(cell.ari, 6) + '\t' + (is_best ? "1" : "0") + '\n';
      }
      run.write(w_out, tsv);
      std::cout << "best\t" << text::format_double(result.best.support_min) << '\t'
                << text::format_double(result.best.distance_max) << '\t' << text::fixed(result.best_ari, 6) << '\n';
      manifest_at = w_out;
    } else if (active == ari) {
      const auto p = parse_partition(run.read(a_partition));
      double value = 0.0;
      if (!a_reference.empty()) {
        ReferenceSet ref{parse_partition(run.read(a_reference)), p.ids()};
        value = partial_gold_ari(p, ref);
      } else if (!a_against.empty() || !a_planted.empty()) {
        const auto q = parse_partition(run.read(a_against.empty() ? a_planted : a_against));
        if (q.size() != p.size()) throw Error(ErrorKind::IdSetMismatch, "partitions cover different ids");
        value = adjusted_rand_index(p, q.restricted(p.ids()));
      } else {
        throw Error(ErrorKind::InvalidArgument, "give one of --against, --planted, --reference");
      }
      std::cout << text::fixed(value, 6) << '\n';
      if (!a_out.empty()) {
        run.write(a_out, text::fixed(value, 6) + "\n");
        manifest_at = a_out;
      }
    } else if (active == compare) {
      std::vector<std::string> names;
      std::vector<Partition> parts;
      for (const auto& spec : m_partitions) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
          throw Error(ErrorKind::InvalidArgument, "--partition expects NAME=FILE, got '" + spec + "'");
        names.push_back(spec.substr(0, eq));
        parts.push_back(parse_partition(run.read(spec.substr(eq + 1))));
      }
      std::vector<std::string> ids = parts.front().ids();
      std::sort(ids.begin(), ids.end());
      for (auto& q : parts) {
        if (q.size() != ids.size()) throw Error(ErrorKind::IdSetMismatch, "partitions cover different ids");
        q = q.restricted(ids);
      }
      const fs::path dir = m_out_dir;
      std::string table = "method";
      for (const auto& n : names) table += '\t' + n;
      table += '\n';
      for (std::size_t a = 0; a < parts.size(); ++a) {
        table += names[a];
        for (std::size_t b = 0; b < parts.size(); ++b) table += '\t' + text::fixed(adjusted_rand_index(parts[a], parts[b]), 4);
        table += '\n';
      }
      run.write(dir / "ari_table.tsv", table);

      std::string summary =
          "method\tmean_size\tmean_size_no_singletons\tmedian_size_no_singletons\tmax_size\tnum_singletons\tnum_clusters_ge2\n";
      std::string sizes = "method\tsize\tclusters\n";
      for (std::size_t a = 0; a < parts.size(); ++a) {
        const auto s = partition_summary(parts[a]);
        summary += names[a] + '\t' + text::fixed(s.mean_size, 2) + '\t' + text::fixed(s.mean_size_no_singletons, 2) + '\t' +
                   text::format_double(s.median_size_no_singletons) + '\t' + std::to_string(s.max_size) + '\t' +
                   std::to_string(s.num_singletons) + '\t' + std::to_string(s.num_clusters_ge2) + '\n';
        for (const auto& [size, count] : cluster_size_distribution(parts[a]))
          sizes += names[a] + '\t' + std::to_string(size) + '\t' + std::to_string(count) + '\n';
      }
      run.write(dir / "summary.tsv", summary);
      run.write(dir / "size_distribution.tsv", sizes);

      const auto co = method_cocluster_matrix(parts, ids);
      std::vector<double> upper;
      for (std::size_t i = 0; i < co.ids.size(); ++i)
        for (std::size_t j = i + 1; j < co.ids.size(); ++j) upper.push_back(co.frequency(i, j));
      run.write(dir / "cocluster.pcdm", write_pcdm(co.ids.size(), upper));
      run.write(dir / "cocluster.ids", ids_sidecar(co.ids));
      manifest_at = dir / "ari_table.tsv";
    } else if (active == linkage) {
      const auto summary = read_chain_dir(l_chain_dir);
      for (const char* name : {"cocluster.pcdm", "cocluster.ids", "map_partition.csv"})
        run.inputs[(fs::path(l_chain_dir) / name).string()] = sha256_hex(read_file((fs::path(l_chain_dir) / name).string()));
      const auto p = linkage_estimate(summary, l_walk);
      run.write(l_out, write_partition(p));
      std::cerr << p.size() << " sequences in " << p.cluster_count() << " communities\n";
      manifest_at = l_out;
    } else if (active == growth) {
      GrowthWindow w{parse_date_flag(g_start, "--window-start"), parse_date_flag(g_phi, "--phi-start"),
                     parse_date_flag(g_end, "--window-end")};
      const auto p = parse_partition(run.read(g_partition));
      const auto meta = parse_metadata(run.read(g_metadata));
      const auto rows = growth_report(p, meta, w, g_top);
      run.write(g_out, write_growth_tsv(rows));
      if (!g_svg.empty()) run.write(g_svg, emit_growth_svg(rows));
      const auto b = phi_breakdown(p, meta, w);
      std::cout << "recent_phi\t" << b.total_recent_phi << "\nsingletons\t" << b.singleton_count << "\npairs\t" << b.pair_count
                << "\nsize_3_4\t" << b.other_count << "\nsize_ge5\t" << b.ge5_count << '\n';
      manifest_at = g_out;
    } else if (active == simulate) {
      auto cfg = sim_preset(x_preset, x_seed);
      if (x_mask) cfg.mask_fraction = *x_mask;
      if (x_phi) cfg.phi_fraction = *x_phi;
      const auto sim = simulate_tree(cfg);
      const auto aln = simulate_alignment(sim.tree, cfg);
      const auto meta = simulate_metadata(sim.planted, cfg);
      const fs::path dir = x_out_dir;
      run.write(dir / "tree.nwk", write_newick(sim.tree) + "\n");
      run.write(dir / "alignment.fasta", write_fasta(aln));
      run.write(dir / "metadata.csv", write_metadata(meta));
      run.write(dir / "planted.csv", write_partition(sim.planted));
      run.seeds = json{{"simulate", x_seed}};
      std::cerr << cfg.total_size() << " sequences in " << cfg.cluster_sizes.size() << " planted clusters\n";
      manifest_at = dir / "tree.nwk";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  if (manifest_at.empty()) return 0;
  json flags = json::object();
  for (const CLI::Option* opt : active->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->count() > 0)
      flags[name] = opt->as<std::vector<std::string>>().size() == 1 ? json(opt->as<std::string>())
                                                                    : json(opt->as<std::vector<std::string>>());
    else if (!opt->get_default_str().empty())
      flags[name] = opt->get_default_str();
  }
  flags["threads"] = threads;
  json inputs = json::object();
  for (const auto& [path, digest] : run.inputs) inputs[path] = "sha256:" + digest;
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json manifest = {{"subcommand", run.subcommand},
                   {"flags", flags},
                   {"inputs", inputs},
                   {"outputs", run.outputs},
                   {"version", kVersion},
                   {"seeds", run.seeds},
                   {"duration_seconds", seconds}};
  try {
    write_file(manifest_at.string() + ".manifest.json", manifest.dump(2) + "\n");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
