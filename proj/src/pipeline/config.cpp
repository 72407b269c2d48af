#include "cmax/pipeline/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cmax/errors.hpp"

namespace cmax {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + std::string(key) + "': invalid number '" +
                      std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true|false, got '" +
                    std::string(value) + "'");
}

using Setter = std::function<void(TrainConfig&, std::string_view, const std::filesystem::path&)>;

template <typename T>
Setter number_setter(T TrainConfig::*field) {
  return [field](TrainConfig& c, std::string_view v, const std::filesystem::path&) {
    c.*field = parse_number<T>("", v);
  };
}

Setter path_setter(std::string TrainConfig::*field) {
  return [field](TrainConfig& c, std::string_view v, const std::filesystem::path& base) {
    std::filesystem::path p{std::string(v)};
    if (!v.empty() && p.is_relative() && !base.empty()) p = base / p;
    c.*field = v.empty() ? std::string() : p.string();
  };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"variant",
       [](TrainConfig& c, std::string_view v, const std::filesystem::path&) {
         c.variant = parse_variant(v);
       }},
      {"batch_size", number_setter(&TrainConfig::batch_size)},
      {"context", number_setter(&TrainConfig::context)},
      {"dim", number_setter(&TrainConfig::dim)},
      {"hidden", number_setter(&TrainConfig::hidden)},
      {"epochs", number_setter(&TrainConfig::epochs)},
      {"max_steps", number_setter(&TrainConfig::max_steps)},
      {"lr", number_setter(&TrainConfig::lr)},
      {"beta1", number_setter(&TrainConfig::beta1)},
      {"beta2", number_setter(&TrainConfig::beta2)},
      {"epsilon", number_setter(&TrainConfig::epsilon)},
      {"clip_norm", number_setter(&TrainConfig::clip_norm)},
      {"loss_average",
       [](TrainConfig& c, std::string_view v, const std::filesystem::path&) {
         c.loss_average = parse_bool("loss_average", v);
       }},
      {"train_power_iters", number_setter(&TrainConfig::train_power_iters)},
      {"test_power_iters", number_setter(&TrainConfig::test_power_iters)},
      {"power_tol", number_setter(&TrainConfig::power_tol)},
      {"seed", number_setter(&TrainConfig::seed)},
      {"eval_every", number_setter(&TrainConfig::eval_every)},
      {"corpus", path_setter(&TrainConfig::corpus)},
      {"vectors", path_setter(&TrainConfig::vectors)},
      {"eval_pairs", path_setter(&TrainConfig::eval_pairs)},
      {"eval_corpus", path_setter(&TrainConfig::eval_corpus)},
      {"eval_cls_train", path_setter(&TrainConfig::eval_cls_train)},
      {"eval_cls_test", path_setter(&TrainConfig::eval_cls_test)},
  };
  return table;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (context < 1 || context >= batch_size) {
    throw ConfigError("context must satisfy 1 <= context < batch_size");
  }
  if (dim == 0 || hidden == 0) throw ConfigError("dim and hidden must be positive");
  if (!(lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("beta1 and beta2 must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
  if (train_power_iters == 0 || test_power_iters == 0) {
    throw ConfigError("power iteration counts must be positive");
  }
  if (!(power_tol > 0.0)) throw ConfigError("power_tol must be > 0");
  if (epochs == 0 && max_steps == 0) {
    throw ConfigError("set epochs or max_steps; an unbounded run is not allowed");
  }
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "variant = " << to_string(variant) << '\n'
      << "batch_size = " << batch_size << '\n'
      << "context = " << context << '\n'
      << "dim = " << dim << '\n'
      << "hidden = " << hidden << '\n'
      << "epochs = " << epochs << '\n'
      << "max_steps = " << max_steps << '\n'
      << "lr = " << format_double(lr) << '\n'
      << "beta1 = " << format_double(beta1) << '\n'
      << "beta2 = " << format_double(beta2) << '\n'
      << "epsilon = " << format_double(epsilon) << '\n'
      << "clip_norm = " << format_double(clip_norm) << '\n'
      << "loss_average = " << (loss_average ? "true" : "false") << '\n'
      << "train_power_iters = " << train_power_iters << '\n'
      << "test_power_iters = " << test_power_iters << '\n'
      << "power_tol = " << format_double(power_tol) << '\n'
      << "seed = " << seed << '\n'
      << "eval_every = " << eval_every << '\n'
      << "corpus = " << corpus << '\n'
      << "vectors = " << vectors << '\n'
      << "eval_pairs = " << eval_pairs << '\n'
      << "eval_corpus = " << eval_corpus << '\n'
      << "eval_cls_train = " << eval_cls_train << '\n'
      << "eval_cls_test = " << eval_cls_test << '\n';
  return out.str();
}

TrainConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  TrainConfig config;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                        std::string(key) + "'");
    }
    try {
      it->second(config, value, base_dir);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + " (" + std::string(key) +
                        "): " + e.what());
    }
    if (end == text.size()) break;
  }
  config.validate();
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace cmax
