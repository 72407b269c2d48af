#include "cmax/pipeline/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cmax/errors.hpp"

namespace cmax {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::string_view kMagic = "CMAX-CHECKPOINT\n";
constexpr std::string_view kConfigTag = "[config]\n";
constexpr std::string_view kEndTag = "[end]\n";

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_record(std::string& out, const std::string& name, const Matrix& m) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put<std::uint64_t>(out, m.rows());
  put<std::uint64_t>(out, m.cols());
  const auto flat = m.flat();
  out.append(reinterpret_cast<const char*>(flat.data()), flat.size() * sizeof(double));
}

struct Reader {
  std::string_view bytes;
  std::size_t pos = 0;

  void need(std::size_t n, const std::string& section) {
    if (bytes.size() - pos < n) {
      throw DataError("truncated checkpoint: missing section '" + section + "'");
    }
  }

  template <typename T>
  T get(const std::string& section) {
    need(sizeof(T), section);
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }

  std::string_view line(const std::string& section) {
    const auto end = bytes.find('\n', pos);
    if (end == std::string_view::npos) {
      throw DataError("truncated checkpoint: missing section '" + section + "'");
    }
    std::string_view l = bytes.substr(pos, end - pos);
    pos = end + 1;
    return l;
  }

  // Reads one record and checks it against the expected name and shape.
  void record(const std::string& name, Matrix& target) {
    const auto len = get<std::uint32_t>(name);
    need(len, name);
    const std::string_view got = bytes.substr(pos, len);
    pos += len;
    if (got != name) {
      throw DataError("checkpoint record mismatch: expected '" + name + "', found '" +
                      std::string(got) + "'");
    }
    const auto rows = get<std::uint64_t>(name);
    const auto cols = get<std::uint64_t>(name);
    if (rows != target.rows() || cols != target.cols()) {
      throw DataError("checkpoint shape mismatch for '" + name + "': file has " +
                      std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                      target.shape_string());
    }
    need(rows * cols * sizeof(double), name);
    std::memcpy(target.flat().data(), bytes.data() + pos, rows * cols * sizeof(double));
    pos += rows * cols * sizeof(double);
  }
};

std::string_view value_of(std::string_view line, std::string_view key) {
  const std::string prefix = std::string(key) + " = ";
  if (line.substr(0, prefix.size()) != prefix) {
    throw DataError("checkpoint header: expected '" + std::string(key) + "'");
  }
  return line.substr(prefix.size());
}

std::uint64_t parse_u64(std::string_view text, std::string_view key) {
  try {
    std::size_t used = 0;
    const std::string s(text);
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw DataError("checkpoint header: bad value for '" + std::string(key) + "'");
  }
}

// Names and shapes of everything Adam tracks: parameters then log τ.
std::vector<std::string> optimizer_names(const ModelParams& p) {
  auto names = p.matrix_names();
  names.push_back("temperature/log_tau");
  return names;
}

std::vector<Matrix> optimizer_shapes(const ModelParams& p) {
  std::vector<Matrix> out;
  for (const Matrix* m : p.matrices()) out.emplace_back(m->rows(), m->cols());
  out.emplace_back(1, 1);
  return out;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic);
  out += "version = " + std::to_string(kCheckpointVersion) + "\n";
  out += "step = " + std::to_string(ckpt.adam.step) + "\n";
  out += "metrics = " + ckpt.metrics_path + "\n";
  out += kConfigTag;
  out += ckpt.config.to_text();
  out += kEndTag;

  const auto names = ckpt.params.matrix_names();
  const auto mats = ckpt.params.matrices();
  for (std::size_t k = 0; k < mats.size(); ++k) put_record(out, names[k], *mats[k]);
  put_record(out, "temperature/log_tau", Matrix(1, 1, ckpt.params.temperature.log_tau));

  const auto opt_names = optimizer_names(ckpt.params);
  const auto zeros = optimizer_shapes(ckpt.params);
  for (const char* which : {"m", "v"}) {
    const auto& moments = std::string_view(which) == "m" ? ckpt.adam.m : ckpt.adam.v;
    if (!moments.empty() && moments.size() != zeros.size()) {
      throw std::invalid_argument("serialize_checkpoint: optimizer state does not match params");
    }
    for (std::size_t k = 0; k < zeros.size(); ++k) {
      put_record(out, std::string("adam/") + which + "/" + opt_names[k],
                 moments.empty() ? zeros[k] : moments[k]);
    }
  }
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  Reader r{bytes, kMagic.size()};
  const auto version = parse_u64(value_of(r.line("header"), "version"), "version");
  if (version != static_cast<std::uint64_t>(kCheckpointVersion)) {
    throw DataError("incompatible checkpoint version " + std::to_string(version) +
                    " (this build reads version " + std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ckpt;
  ckpt.adam.step = parse_u64(value_of(r.line("header"), "step"), "step");
  ckpt.metrics_path = std::string(value_of(r.line("header"), "metrics"));
  if (std::string(r.line("config")) + "\n" != kConfigTag) {
    throw DataError("checkpoint header: expected [config]");
  }
  std::string config_text;
  for (;;) {
    const std::string_view l = r.line("config");
    if (std::string(l) + "\n" == kEndTag) break;
    config_text += l;
    config_text += '\n';
  }
  try {
    ckpt.config = parse_config(config_text);
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint config: ") + e.what());
  }

  ckpt.params = init_model(ckpt.config.variant, ckpt.config.dim, ckpt.config.hidden, 0);
  const auto names = ckpt.params.matrix_names();
  const auto mats = ckpt.params.matrices();
  for (std::size_t k = 0; k < mats.size(); ++k) r.record(names[k], *mats[k]);
  Matrix log_tau(1, 1);
  r.record("temperature/log_tau", log_tau);
  ckpt.params.temperature.log_tau = log_tau(0, 0);

  ckpt.adam.config = {ckpt.config.lr, ckpt.config.beta1, ckpt.config.beta2, ckpt.config.epsilon};
  const auto opt_names = optimizer_names(ckpt.params);
  ckpt.adam.m = optimizer_shapes(ckpt.params);
  ckpt.adam.v = optimizer_shapes(ckpt.params);
  for (std::size_t k = 0; k < opt_names.size(); ++k) r.record("adam/m/" + opt_names[k], ckpt.adam.m[k]);
  for (std::size_t k = 0; k < opt_names.size(); ++k) r.record("adam/v/" + opt_names[k], ckpt.adam.v[k]);
  if (r.pos != bytes.size()) throw DataError("checkpoint has trailing bytes");
  return ckpt;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize_checkpoint(ss.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace cmax
