// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include "oneshot/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace oneshot {
namespace {

enum class Group { kRun, kTraining, kMetrics };

struct KeySpec {
  const char* name;
  Group group;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'", key);
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'", key);
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + v + "'", key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("config key '" + key + "' expects true or false, got '" + v + "'", key);
}

#define ONESHOT_DOUBLE(key, group, field)                                     \
  KeySpec {                                                                   \
    key, group, [](const RunConfig& c) { return fmt_double(c.field); },       \
        [](RunConfig& c, const std::string& v) { c.field = parse_double(key, v); } \
  }
#define ONESHOT_INT(key, group, field)                                         \
  KeySpec {                                                                    \
    key, group, [](const RunConfig& c) { return std::to_string(c.field); },    \
        [](RunConfig& c, const std::string& v) { c.field = parse_int(key, v); } \
  }
#define ONESHOT_UINT(key, group, field)                                         \
  KeySpec {                                                                     \
    key, group, [](const RunConfig& c) { return std::to_string(c.field); },     \
        [](RunConfig& c, const std::string& v) { c.field = parse_uint(key, v); } \
  }
#define ONESHOT_BOOL(key, group, field)                                                  \
  KeySpec {                                                                              \
    key, group, [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& v) { c.field = parse_bool(key, v); }          \
  }

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"input", Group::kRun, [](const RunConfig& c) { return c.input.string(); },
       [](RunConfig& c, const std::string& v) { c.input = v; }},
      {"mode", Group::kRun, [](const RunConfig& c) { return std::string(to_string(c.mode)); },
       [](RunConfig& c, const std::string& v) {
         try {
           c.mode = parse_source_mode(v);
         } catch (const ValidationError& e) {
           throw ConfigError(e.what(), "mode");
         }
       }},
      {"out_dir", Group::kRun, [](const RunConfig& c) { return c.out_dir.string(); },
       [](RunConfig& c, const std::string& v) { c.out_dir = v; }},

      ONESHOT_UINT("seed", Group::kTraining, training.seed),
      ONESHOT_INT("max_side", Group::kTraining, training.max_side),
      ONESHOT_INT("total_steps", Group::kTraining, training.total_steps),
      ONESHOT_INT("checkpoint_every", Group::kTraining, training.checkpoint_every),
      ONESHOT_INT("sample_every", Group::kTraining, training.sample_every),
      ONESHOT_INT("sample_rows", Group::kTraining, training.sample_rows),
      ONESHOT_INT("sample_cols", Group::kTraining, training.sample_cols),
      ONESHOT_DOUBLE("learning_rate", Group::kTraining, training.learning_rate),
      ONESHOT_DOUBLE("adam_beta1", Group::kTraining, training.adam_beta1),
      ONESHOT_DOUBLE("adam_beta2", Group::kTraining, training.adam_beta2),
      ONESHOT_DOUBLE("adam_eps", Group::kTraining, training.adam_eps),
      ONESHOT_INT("batch_size", Group::kTraining, training.batch_size),
      ONESHOT_DOUBLE("lambda_dr", Group::kTraining, training.lambda_dr),
      ONESHOT_DOUBLE("dr_ceiling", Group::kTraining, training.dr_ceiling),
      {"dr_norm", Group::kTraining,
       [](const RunConfig& c) {
         return std::string(c.training.dr_norm == DiversityNorm::kMeanPerElement ? "mean" : "raw");
       },
       [](RunConfig& c, const std::string& v) {
         if (v == "mean") c.training.dr_norm = DiversityNorm::kMeanPerElement;
         else if (v == "raw") c.training.dr_norm = DiversityNorm::kRawL1;
         else throw ConfigError("config key 'dr_norm' expects mean or raw, got '" + v + "'", "dr_norm");
       }},
      {"generator_loss", Group::kTraining,
       [](const RunConfig& c) {
         return std::string(c.training.generator_loss == GeneratorLossForm::kNonSaturating ? "non_saturating"
                                                                                           : "saturating");
       },
       [](RunConfig& c, const std::string& v) {
         if (v == "non_saturating") c.training.generator_loss = GeneratorLossForm::kNonSaturating;
         else if (v == "saturating") c.training.generator_loss = GeneratorLossForm::kSaturating;
         else
           throw ConfigError("config key 'generator_loss' expects non_saturating or saturating, got '" + v + "'",
                             "generator_loss");
       }},
      ONESHOT_BOOL("augment_fakes", Group::kTraining, training.augment_fakes),
      ONESHOT_DOUBLE("ema_decay", Group::kTraining, training.ema_decay),

      ONESHOT_DOUBLE("aug_apply_prob", Group::kTraining, training.augmentation.apply_prob),
      ONESHOT_DOUBLE("aug_flip_prob", Group::kTraining, training.augmentation.horizontal_flip_prob),
      ONESHOT_DOUBLE("aug_brightness", Group::kTraining, training.augmentation.brightness),
      ONESHOT_DOUBLE("aug_saturation", Group::kTraining, training.augmentation.saturation),
      ONESHOT_DOUBLE("aug_contrast", Group::kTraining, training.augmentation.contrast),
      ONESHOT_DOUBLE("aug_translation", Group::kTraining, training.augmentation.translation_frac),
      ONESHOT_DOUBLE("aug_cutout", Group::kTraining, training.augmentation.cutout_frac),

      ONESHOT_INT("g_z_dim", Group::kTraining, training.generator.z_dim),
      ONESHOT_INT("g_num_up_blocks", Group::kTraining, training.generator.num_up_blocks),
      ONESHOT_INT("g_base_channels", Group::kTraining, training.generator.base_channels),

      ONESHOT_INT("d_trunk_blocks", Group::kTraining, training.discriminator.trunk_blocks),
      ONESHOT_INT("d_branch_blocks", Group::kTraining, training.discriminator.branch_blocks),
      ONESHOT_INT("d_trunk_channels", Group::kTraining, training.discriminator.trunk_channels),
      ONESHOT_INT("d_branch_channels", Group::kTraining, training.discriminator.branch_channels),
      ONESHOT_INT("d_layout_collapse_channels", Group::kTraining, training.discriminator.layout_collapse_channels),
      ONESHOT_BOOL("d_spectral_norm", Group::kTraining, training.discriminator.spectral_norm),

      ONESHOT_INT("eval_n_generated", Group::kMetrics, metrics.n_generated),
      ONESHOT_UINT("eval_seed", Group::kMetrics, metrics.seed),
      ONESHOT_INT("eval_n_aug", Group::kMetrics, metrics.n_aug),
      ONESHOT_INT("eval_sifid_stage", Group::kMetrics, metrics.sifid_stage),
      {"eval_extractor_weights", Group::kMetrics, [](const RunConfig& c) { return c.metrics.extractor_weights; },
       [](RunConfig& c, const std::string& v) { c.metrics.extractor_weights = v; }},
      ONESHOT_UINT("eval_extractor_seed", Group::kMetrics, metrics.extractor_seed),
  };
  return table;
}

#undef ONESHOT_DOUBLE
#undef ONESHOT_INT
#undef ONESHOT_UINT
#undef ONESHOT_BOOL

const KeySpec* find_key(std::string_view name) {
  for (const auto& k : key_table())
    if (name == k.name) return &k;
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Applies `key = value` lines; returns the keys seen.
std::set<std::string> apply_lines(RunConfig& config, std::string_view text, bool training_only) {
  std::set<std::string> seen;
  std::istringstream is{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto body = trim(line);
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + " is not 'key = value': '" + body + "'");
    auto key = trim(std::string_view(body).substr(0, eq));
    auto value = trim(std::string_view(body).substr(eq + 1));
    const auto* spec = find_key(key);
    if (!spec || (training_only && spec->group != Group::kTraining)) {
      auto near = nearest_config_key(key);
      throw ConfigError("unknown config key '" + key + "' (did you mean '" + near + "'?)", key, near);
    }
    if (!seen.insert(key).second) throw ConfigError("config key '" + key + "' given more than once", key);
    spec->set(config, value);
  }
  return seen;
}

std::string format_group(const RunConfig& config, bool training_only) {
  std::string out;
  for (const auto& k : key_table()) {
    if (training_only && k.group != Group::kTraining) continue;
    out += k.name;
    out += " = ";
    out += k.get(config);
    out += '\n';
  }
  return out;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.emplace_back(k.name);
  return out;
}

std::string nearest_config_key(std::string_view key) {
  std::string best;
  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  for (const auto& k : key_table()) {
    auto d = edit_distance(key, k.name);
    if (d < best_d) {
      best_d = d;
      best = k.name;
    }
  }
  return best;
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig config;
  auto seen = apply_lines(config, text, /*training_only=*/false);
  for (const char* required : {"input", "mode"}) {
    if (!seen.count(required)) throw ConfigError(std::string("config is missing required key '") + required + "'", required);
  }
  if (!base_dir.empty()) {
    if (config.input.is_relative()) config.input = base_dir / config.input;
    if (config.out_dir.is_relative()) config.out_dir = base_dir / config.out_dir;
  }
  try {
    config.training.validate();
    config.metrics.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  auto base = std::filesystem::absolute(path).parent_path();
  return parse_run_config(ss.str(), base);
}

std::string format_run_config(const RunConfig& config) {
  return format_group(config, /*training_only=*/false);
}

std::string format_training_config(const TrainingConfig& config) {
  RunConfig rc;
  rc.training = config;
  return format_group(rc, /*training_only=*/true);
}

TrainingConfig parse_training_config(std::string_view text) {
  RunConfig rc;
  apply_lines(rc, text, /*training_only=*/true);
  rc.training.validate();
  return rc.training;
}

std::string config_digest(const TrainingConfig& config) {
  // Schedule keys only decide how long to run and what to emit, so a run can
  // be extended or re-sampled on resume.
  TrainingConfig hashed = config;
  const TrainingConfig defaults;
  hashed.total_steps = defaults.total_steps;
  hashed.checkpoint_every = defaults.checkpoint_every;
  hashed.sample_every = defaults.sample_every;
  hashed.sample_rows = defaults.sample_rows;
  hashed.sample_cols = defaults.sample_cols;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : format_training_config(hashed)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace oneshot
