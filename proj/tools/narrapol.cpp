// Copyright 2026 The Narrapol Authors.
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

// narrapol: command-line driver for the harvest, annotate and analysis stages.
//
// Settings come from one JSON config file (built-in defaults when --config is
// absent); command-line flags override the matching config fields.
//
// Exit codes: 0 ok, 2 configuration error, 3 upstream service error,
// 4 data contract violation, 1 anything else.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "narrapol/annotate.hpp"
#include "narrapol/config.hpp"
#include "narrapol/corpus.hpp"
#include "narrapol/error.hpp"
#include "narrapol/harvest.hpp"
#include "narrapol/ingest.hpp"
#include "narrapol/pipeline.hpp"
#include "narrapol/synth.hpp"

namespace fs = std::filesystem;
using namespace narrapol;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Seed for every random stream");
  cmd->add_option("--out", c.out, "Output directory (overrides output_dir)");
  cmd->add_flag("-q,--quiet", c.quiet, "Only print errors");
}

RunConfig load_config(const Common& c) {
  RunConfig config = c.config_path.empty() ? RunConfig::defaults() : RunConfig::load(c.config_path);
  if (c.seed) config.resampling.seed = *c.seed;
  if (!c.out.empty()) config.output_dir = c.out;
  return config;
}

void note(const Common& c, const std::string& line) {
  if (!c.quiet) std::cerr << "narrapol: " << line << "\n";
}

fs::path output_dir(const RunConfig& config) {
  fs::path dir = config.output_dir;
  fs::create_directories(dir);
  return dir;
}

// Stages never write over their own inputs.
void check_not_input(const fs::path& output, const std::vector<std::string>& inputs) {
  std::error_code ec;
  for (const auto& in : inputs) {
    if (fs::exists(output, ec) && fs::equivalent(output, in, ec)) {
      throw ConfigError("output " + output.string() + " would overwrite input " + in);
    }
  }
}

Corpus load_corpus(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("no such corpus file: " + path);
  return read_corpus(path);
}

void save_corpus(const Corpus& corpus, const fs::path& path, const std::vector<std::string>& inputs) {
  check_not_input(path, inputs);
  std::ostringstream out;
  write_corpus(corpus, out);
  write_file_atomic(path, out.str());
}

void save_report(const fs::path& path, std::string_view stage, const RunConfig& config, const ojson& body) {
  write_file_atomic(path, stage_report(stage, config, body));
}

void print_warnings(const Common& c, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) note(c, "warning: " + w);
}

// -- harvest ----------------------------------------------------------------

struct HarvestArgs {
  std::string queries_path;
  std::string group;
  std::string from, to;
  std::string cache;
};

std::vector<GroupQueries> read_queries(const std::string& path) {
  auto text = read_file(path);
  if (!text) throw ConfigError("cannot read queries file " + path);
  json j = json::parse(*text, nullptr, false);
  if (j.is_discarded() || !j.is_array()) throw ConfigError("queries file: expected an array of {id, queries}");
  RunConfig probe = RunConfig::from_json(json{{"groups", j}});
  return probe.groups;
}

int run_harvest(const Common& c, const HarvestArgs& a) {
  RunConfig config = load_config(c);
  if (!a.queries_path.empty()) config.groups = read_queries(a.queries_path);
  if (!a.from.empty()) config.harvest.published_after = a.from;
  if (!a.to.empty()) config.harvest.published_before = a.to;
  if (!a.cache.empty()) config.harvest_cache_dir = a.cache;
  config.validate();

  std::vector<GroupQueries> groups;
  for (const auto& g : config.groups) {
    if (a.group.empty() || g.id == a.group) groups.push_back(g);
  }
  if (groups.empty()) throw ConfigError("harvest: no query group named '" + a.group + "'");

  YouTubeOptions options;
  options.api_key = youtube_key_from_env();
  options.cache_dir = config.harvest_cache_dir;
  options.requests_per_second = config.harvest_requests_per_second;
  options.log = [&c](std::string_view line) { note(c, std::string(line)); };
  YouTubeClient client(options);

  std::vector<std::string> warnings;
  std::map<std::string, std::vector<VideoRecord>> hits;
  for (const auto& g : groups) {
    auto& list = hits[g.id];
    for (const auto& q : g.queries) {
      auto found = client.search(q, config.harvest);
      list.insert(list.end(), found.videos.begin(), found.videos.end());
      warnings.insert(warnings.end(), found.warnings.begin(), found.warnings.end());
    }
  }
  const DatasetSelection selection = apply_dataset_rules(hits, config.rules);

  Corpus comments;
  json videos = json::object();
  std::int64_t disabled = 0;
  for (const auto& [group, list] : selection.groups) {
    json arr = json::array();
    for (const auto& v : list) {
      arr.push_back(video_to_json(v));
      auto got = client.comments(v.id, group);
      disabled += got.comments_disabled;
      warnings.insert(warnings.end(), got.warnings.begin(), got.warnings.end());
      for (auto& doc : got.comments) {
        doc.view_count = v.view_count;
        comments.push_back(std::move(doc));
      }
    }
    videos[group] = arr;
  }
  json drops = json::array();
  for (const auto& d : selection.drops) {
    drops.push_back({{"video_id", d.video_id}, {"group", d.group}, {"reason", d.reason}});
  }

  const fs::path dir = output_dir(config);
  save_corpus(comments, dir / "comments.jsonl", {});
  write_file_atomic(dir / "videos.json", json{{"groups", videos}, {"drops", drops}}.dump(2) + "\n");
  save_report(dir / "harvest_report.json", "harvest", config,
              {{"requests", client.requests_sent()},
               {"comments", comments.size()},
               {"videos_with_comments_disabled", disabled},
               {"dropped_videos", selection.drops.size()},
               {"warnings", warnings}});
  print_warnings(c, warnings);
  note(c, "harvested " + std::to_string(comments.size()) + " comments into " + (dir / "comments.jsonl").string());
  return 0;
}

// -- segment / filter ---------------------------------------------------------

int run_segment(const Common& c, const std::string& input, std::optional<std::int64_t> target,
                std::optional<std::int64_t> merge) {
  RunConfig config = load_config(c);
  if (target) config.segmentation.target_words = *target;
  if (merge) config.segmentation.merge_threshold = *merge;
  config.validate();
  const Corpus transcripts = load_corpus(input);
  const Corpus segments = segment_corpus(transcripts, config.segmentation);
  const fs::path dir = output_dir(config);
  save_corpus(segments, dir / "segments.jsonl", {input});
  save_report(dir / "segment_report.json", "segment", config,
              {{"input", input},
               {"transcripts", transcripts.size()},
               {"segments", segments.size()},
               {"target_words", config.segmentation.target_words},
               {"merge_threshold", config.segmentation.merge_threshold}});
  note(c, std::to_string(transcripts.size()) + " transcripts -> " + std::to_string(segments.size()) + " segments");
  return 0;
}

int run_filter(const Common& c, const std::string& input, std::optional<std::int64_t> min,
               std::optional<std::int64_t> max) {
  RunConfig config = load_config(c);
  if (min) config.rules.comment_word_bounds.min = *min;
  if (max) config.rules.comment_word_bounds.max = *max;
  config.validate();
  FilterReport report;
  const Corpus kept = filter_comments(load_corpus(input), config.rules.comment_word_bounds, &report);
  const fs::path dir = output_dir(config);
  save_corpus(kept, dir / "filtered.jsonl", {input});
  save_report(dir / "filter_report.json", "filter", config,
              {{"input", input},
               {"min_words", config.rules.comment_word_bounds.min},
               {"max_words", config.rules.comment_word_bounds.max},
               {"kept", report.kept},
               {"dropped_below", report.dropped_below},
               {"dropped_above", report.dropped_above}});
  note(c, "kept " + std::to_string(report.kept) + ", dropped " +
              std::to_string(report.dropped_below + report.dropped_above));
  return 0;
}

// -- annotate -----------------------------------------------------------------

struct AnnotateArgs {
  std::string input;
  std::string endpoint;
  std::string model;
  std::optional<int> concurrency;
  std::string cache;
};

void apply_annotate_args(RunConfig& config, const AnnotateArgs& a) {
  if (!a.endpoint.empty()) config.annotation.base_url = a.endpoint;
  if (!a.model.empty()) config.annotation.model = a.model;
  if (a.concurrency) config.annotation.concurrency = *a.concurrency;
  if (!a.cache.empty()) config.annotation_cache_dir = a.cache;
  if (const char* key = std::getenv(kAnnotateKeyVariable); key && *key) config.annotation.api_key = key;
}

AnnotationRun annotate_with(const RunConfig& config, const Corpus& corpus, const Taxonomy& taxonomy) {
  return annotate_corpus(corpus, taxonomy, config.load_prompt_template(), config.annotation,
                         config.annotation_cache_dir);
}

int run_annotate(const Common& c, const AnnotateArgs& a) {
  RunConfig config = load_config(c);
  apply_annotate_args(config, a);
  config.validate();
  const Taxonomy taxonomy = config.load_taxonomy();
  const AnnotationRun run = annotate_with(config, load_corpus(a.input), taxonomy);
  const fs::path dir = output_dir(config);
  save_corpus(run.corpus, dir / "annotated.jsonl", {a.input});
  save_report(dir / "annotation_report.json", "annotate", config, run.report.to_json());
  note(c, "annotated " + std::to_string(run.report.n_documents - run.report.n_failed) + "/" +
              std::to_string(run.report.n_documents) + " documents (" + std::to_string(run.report.n_cached) +
              " cached, " + std::to_string(run.report.n_requests) + " requests)");
  return run.report.n_failed > 0 && run.report.n_failed == run.report.n_documents ? 3 : 0;
}

// -- analyze / robustness -------------------------------------------------------

struct AnalyzeArgs {
  std::string input;
  std::string mode;
  std::string permutation;
  std::string unit;
  std::optional<int> replicates;
  std::optional<int> threads;
};

void apply_analyze_args(RunConfig& config, const AnalyzeArgs& a) {
  json patch = json::object();
  if (!a.mode.empty()) patch["analysis"]["divergence_mode"] = a.mode;
  if (!a.permutation.empty()) patch["analysis"]["permutation"] = a.permutation;
  if (!a.unit.empty()) patch["resampling"]["unit"] = a.unit;
  if (a.replicates) patch["resampling"]["n_replicates"] = *a.replicates;
  if (a.threads) patch["resampling"]["threads"] = *a.threads;
  if (patch.empty()) return;
  json merged = config.to_json();
  merged.merge_patch(patch);
  config = RunConfig::from_json(merged);
}

void add_analyze_options(CLI::App* cmd, AnalyzeArgs& a) {
  cmd->add_option("--in", a.input, "Annotated corpus (JSONL)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--mode", a.mode, "Divergence mode")->check(CLI::IsMember({"reduced", "full"}));
  cmd->add_option("--permutation", a.permutation, "Permutation scheme")->check(CLI::IsMember({"per_object", "joint"}));
  cmd->add_option("--unit", a.unit, "Resampling unit")->check(CLI::IsMember({"document", "video"}));
  cmd->add_option("--replicates", a.replicates, "Bootstrap and permutation replicates");
  cmd->add_option("--threads", a.threads, "Worker threads for resampling");
}

void finish_bundle(const Common& c, const Bundle& bundle, const fs::path& dir) {
  bundle.write(dir);
  print_warnings(c, bundle.warnings);
  note(c, "wrote " + std::to_string(bundle.files.size()) + " files to " + dir.string());
}

int run_analyze_cmd(const Common& c, const AnalyzeArgs& a) {
  RunConfig config = load_config(c);
  apply_analyze_args(config, a);
  const Corpus corpus = load_corpus(a.input);
  const Bundle bundle = run_analyze(config, corpus);
  finish_bundle(c, bundle, output_dir(config));
  return 0;
}

int run_robustness_cmd(const Common& c, const AnalyzeArgs& a, const std::string& variant_text,
                       const std::string& transcripts_path, const AnnotateArgs& annotate_args) {
  RunConfig config = load_config(c);
  apply_analyze_args(config, a);
  apply_annotate_args(config, annotate_args);
  const auto variant = RobustnessVariant::parse(variant_text);
  const Taxonomy taxonomy = config.load_taxonomy();
  const Corpus corpus = load_corpus(a.input);

  RobustnessInputs inputs;
  Corpus transcripts;
  if (variant.kind == RobustnessVariant::Kind::SegmentTarget) {
    if (transcripts_path.empty()) throw ConfigError("robustness: segment variants need --transcripts");
    transcripts = load_corpus(transcripts_path);
    inputs.raw_transcripts = &transcripts;
    inputs.annotate = [&](const Corpus& segments) {
      auto run = annotate_with(config, segments, taxonomy);
      note(c, "annotated " + std::to_string(run.report.n_documents) + " re-segmented documents");
      return run.corpus;
    };
  }
  const Bundle bundle = run_robustness(config, corpus, taxonomy, variant, inputs);
  finish_bundle(c, bundle, output_dir(config) / variant.label());
  return 0;
}

// -- agreement --------------------------------------------------------------------

int run_agreement_cmd(const Common& c, const std::vector<std::string>& coders) {
  RunConfig config = load_config(c);
  std::vector<std::pair<std::string, Corpus>> loaded;
  for (const auto& arg : coders) {
    // name=path, or a bare path named after its file stem
    auto eq = arg.find('=');
    std::string name = eq == std::string::npos ? fs::path(arg).stem().string() : arg.substr(0, eq);
    std::string path = eq == std::string::npos ? arg : arg.substr(eq + 1);
    for (const auto& [other, corpus] : loaded) {
      if (other == name) throw ConfigError("agreement: coder name '" + name + "' given twice");
    }
    loaded.emplace_back(name, load_corpus(path));
  }
  const Bundle bundle = run_agreement(config, loaded);
  finish_bundle(c, bundle, output_dir(config));
  return 0;
}

// -- synth ----------------------------------------------------------------------------

int run_synth(const Common& c, const std::string& params_path) {
  RunConfig config = load_config(c);
  auto text = read_file(params_path);
  if (!text) throw ConfigError("cannot read synth params " + params_path);
  json j = json::parse(*text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("synth params are not valid JSON");
  SynthParams params = SynthParams::from_json(j);
  if (c.seed) params.seed = *c.seed;
  const Taxonomy taxonomy = config.load_taxonomy();
  const Corpus corpus = generate(params, taxonomy);

  json expected = json::object();
  const auto& il = config.rules.partisan_groups[0];
  const auto& pl = config.rules.partisan_groups[1];
  for (DocumentKind kind : {DocumentKind::TranscriptSegment, DocumentKind::Comment}) {
    bool both = false;
    for (const auto& g : params.groups) both |= g.kind == kind && g.group == il;
    bool other = false;
    for (const auto& g : params.groups) other |= g.kind == kind && g.group == pl;
    if (both && other) {
      expected[std::string(kind_name(kind))] = expected_to_json(expected_divergence(params, kind, il, pl));
    }
  }
  const fs::path dir = output_dir(config);
  save_corpus(corpus, dir / "synthetic.jsonl", {params_path});
  write_file_atomic(dir / "expected.json",
                    stage_report("expected", config,
                                 {{"synth_seed", params.seed}, {"params", params.to_json()}, {"expected", expected}}));
  note(c, "generated " + std::to_string(corpus.size()) + " documents");
  return 0;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const UpstreamError*>(&e)) return 3;
  if (dynamic_cast<const DataContractError*>(&e)) return 4;
  if (dynamic_cast<const json::exception*>(&e)) return 4;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"narrapol: actantial narrative polarisation toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Common common;
  std::function<int()> action;

  HarvestArgs harvest;
  auto* h = app.add_subcommand("harvest", "Search videos per query group and fetch their top-level comments");
  add_common(h, common);
  h->add_option("--queries", harvest.queries_path, "JSON array of {id, queries}")->check(CLI::ExistingFile);
  h->add_option("--group", harvest.group, "Only harvest this group");
  h->add_option("--from", harvest.from, "publishedAfter, e.g. 2023-10-07T00:00:00Z");
  h->add_option("--to", harvest.to, "publishedBefore");
  h->add_option("--cache", harvest.cache, "Response cache directory");
  h->callback([&] { action = [&] { return run_harvest(common, harvest); }; });

  std::string seg_in;
  std::optional<std::int64_t> target, merge;
  auto* s = app.add_subcommand("segment", "Split whole transcripts into segments");
  add_common(s, common);
  s->add_option("--in", seg_in, "Transcripts (JSONL)")->required()->check(CLI::ExistingFile);
  s->add_option("--target-words", target, "Split at the first sentence end after this many words");
  s->add_option("--merge-threshold", merge, "Shorter trailing remainders join the previous segment");
  s->callback([&] { action = [&] { return run_segment(common, seg_in, target, merge); }; });

  std::string filt_in;
  std::optional<std::int64_t> min, max;
  auto* f = app.add_subcommand("filter", "Keep comments within the word-count bounds");
  add_common(f, common);
  f->add_option("--in", filt_in, "Corpus (JSONL)")->required()->check(CLI::ExistingFile);
  f->add_option("--min", min, "Minimum word count (inclusive)");
  f->add_option("--max", max, "Maximum word count (inclusive)");
  f->callback([&] { action = [&] { return run_filter(common, filt_in, min, max); }; });

  AnnotateArgs annotate;
  auto add_endpoint = [&](CLI::App* cmd) {
    cmd->add_option("--endpoint", annotate.endpoint, "Inference server base URL");
    cmd->add_option("--model", annotate.model, "Model id");
    cmd->add_option("--concurrency", annotate.concurrency, "Requests in flight");
    cmd->add_option("--cache", annotate.cache, "Annotation cache directory");
  };
  auto* an = app.add_subcommand("annotate", "Label each document with its actantial frame");
  add_common(an, common);
  an->add_option("--in", annotate.input, "Corpus (JSONL)")->required()->check(CLI::ExistingFile);
  add_endpoint(an);
  an->callback([&] { action = [&] { return run_annotate(common, annotate); }; });

  AnalyzeArgs analyze;
  auto* az = app.add_subcommand("analyze", "Compute every analysis artifact for an annotated corpus");
  add_common(az, common);
  add_analyze_options(az, analyze);
  az->callback([&] { action = [&] { return run_analyze_cmd(common, analyze); }; });

  AnalyzeArgs robust;
  std::string variant, transcripts;
  auto* rb = app.add_subcommand("robustness", "Re-run the analysis under a modified side map or segmentation");
  add_common(rb, common);
  add_analyze_options(rb, robust);
  rb->add_option("--variant", variant, "drop:<actor>,<actor> or segment:<words>")->required();
  rb->add_option("--transcripts", transcripts, "Whole transcripts, for segment variants")->check(CLI::ExistingFile);
  add_endpoint(rb);
  rb->callback([&] { action = [&] { return run_robustness_cmd(common, robust, variant, transcripts, annotate); }; });

  std::vector<std::string> coders;
  auto* ag = app.add_subcommand("agreement", "Compare annotations of the same documents by several coders");
  add_common(ag, common);
  ag->add_option("coders", coders, "Annotated corpora, as path or name=path")->required()->expected(2, -1);
  ag->callback([&] { action = [&] { return run_agreement_cmd(common, coders); }; });

  std::string params;
  auto* sy = app.add_subcommand("synth", "Generate an annotated synthetic corpus and its expected values");
  add_common(sy, common);
  sy->add_option("--params", params, "Synthetic corpus parameters (JSON)")->required()->check(CLI::ExistingFile);
  sy->callback([&] { action = [&] { return run_synth(common, params); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return action();
  } catch (const std::exception& e) {
    std::cerr << "narrapol: error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}
