#include "dcpo/serialization.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "dcpo/errors.hpp"

namespace dcpo {

std::string format_real(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

double parse_real(const std::string& token, const std::string& what) {
  if (token.empty()) throw ConfigError("serialization", "empty number for " + what);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  // Underflow to a subnormal still parses exactly; only overflow is rejected.
  if (end != token.c_str() + token.size() || (errno == ERANGE && std::isinf(v))) {
    throw ConfigError("serialization", "malformed number '" + token + "' for " + what);
  }
  return v;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("io", "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("io", "cannot write '" + path.string() + "'");
    out << text;
    if (!out.flush()) throw ConfigError("io", "write failed for '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

// ---- checkpoints ----

std::string write_checkpoint(const Checkpoint& c) {
  const DenoiserParams& p = c.params;
  std::string out = "{\n  \"format\": \"dcpo-denoiser\",\n  \"version\": 1,\n  \"metadata\": {\"d\": " +
                    std::to_string(p.d) + ", \"k\": " + std::to_string(p.k) + ", \"h\": " + std::to_string(p.h) +
                    ", \"seed\": " + std::to_string(c.seed) + ", \"step\": " + std::to_string(c.step) +
                    "},\n  \"params\": [";
  const Eigen::VectorXd flat = flatten(p);
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    if (i) out += ", ";
    out += format_real(flat[i]);
  }
  out += "]\n}\n";
  return out;
}

Checkpoint read_checkpoint(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("checkpoint", std::string("malformed checkpoint: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "dcpo-denoiser" || j.at("version").get<int>() != 1) {
      throw ConfigError("checkpoint", "unsupported checkpoint format or version");
    }
    const auto& meta = j.at("metadata");
    const int d = meta.at("d").get<int>();
    const int k = meta.at("k").get<int>();
    const int h = meta.at("h").get<int>();
    const auto values = j.at("params").get<std::vector<double>>();
    if (d < 1 || k < 1 || h < 1) throw ConfigError("checkpoint", "dimensions must be positive");
    if (static_cast<Eigen::Index>(values.size()) != denoiser_parameter_count(d, k, h)) {
      throw ConfigError("checkpoint", "parameter count " + std::to_string(values.size()) + " does not match d=" +
                                          std::to_string(d) + " k=" + std::to_string(k) + " h=" + std::to_string(h));
    }
    Checkpoint c;
    c.params = unflatten(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())),
                         d, k, h);
    c.seed = meta.at("seed").get<std::uint64_t>();
    c.step = meta.at("step").get<int>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint", std::string("invalid checkpoint: ") + e.what());
  }
}

void write_checkpoint_file(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_text_file(path, write_checkpoint(checkpoint));
}

Checkpoint read_checkpoint_file(const std::filesystem::path& path) { return read_checkpoint(read_text_file(path)); }

// ---- datasets ----

namespace {

void append_vector(std::string& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out += ',';
    out += format_real(v[i]);
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) fields.push_back(field);
  if (!line.empty() && line.back() == sep) fields.emplace_back();
  return fields;
}

}  // namespace

std::string write_dataset(const std::vector<DualCaptionPair>& dataset) {
  if (dataset.empty()) throw ConfigError("serialization", "refusing to write an empty dataset");
  const auto k = dataset.front().caption_w.size();
  const auto d = dataset.front().preferred.latent.size();
  std::string out = "# dcpo-dataset k=" + std::to_string(k) + " d=" + std::to_string(d) + "\n";
  for (const auto& r : dataset) {
    if (r.caption_w.size() != k || r.caption_l.size() != k || r.preferred.latent.size() != d ||
        r.less_preferred.latent.size() != d) {
      throw ConfigError("serialization", "record " + std::to_string(r.id) + " has inconsistent widths");
    }
    out += to_string(r.provenance);
    out += ',';
    out += std::to_string(r.id);
    append_vector(out, r.caption_w.vec());
    append_vector(out, r.caption_l.vec());
    append_vector(out, r.preferred.latent);
    append_vector(out, r.less_preferred.latent);
    append_vector(out, r.preferred.true_semantics.vec());
    append_vector(out, r.less_preferred.true_semantics.vec());
    out += '\n';
  }
  return out;
}

std::vector<DualCaptionPair> read_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int k = 0;
  int d = 0;
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "# dcpo-dataset k=%d d=%d", &k, &d) != 2 || k < 1 ||
      d < 1) {
    throw ConfigError("serialization", "dataset must start with '# dcpo-dataset k=K d=D'");
  }
  const std::size_t expected = 2 + 4 * static_cast<std::size_t>(k) + 2 * static_cast<std::size_t>(d);
  std::vector<DualCaptionPair> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != expected) {
      throw ConfigError("serialization", where + ": expected " + std::to_string(expected) + " fields, got " +
                                             std::to_string(fields.size()));
    }
    std::size_t at = 2;
    auto take = [&](int n) {
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v[i] = parse_real(fields[at++], where);
      return v;
    };
    DualCaptionPair r;
    r.provenance = provenance_from_string(fields[0]);
    r.id = static_cast<std::size_t>(parse_real(fields[1], where));
    r.caption_w = SemanticVector::from_unit(take(k));
    r.caption_l = SemanticVector::from_unit(take(k));
    r.preferred.latent = take(d);
    r.less_preferred.latent = take(d);
    r.preferred.true_semantics = SemanticVector::from_unit(take(k));
    r.less_preferred.true_semantics = SemanticVector::from_unit(take(k));
    out.push_back(std::move(r));
  }
  if (out.empty()) throw ConfigError("serialization", "dataset has no records");
  return out;
}

void write_dataset_file(const std::filesystem::path& path, const std::vector<DualCaptionPair>& dataset) {
  write_text_file(path, write_dataset(dataset));
}

std::vector<DualCaptionPair> read_dataset_file(const std::filesystem::path& path) {
  return read_dataset(read_text_file(path));
}

std::vector<DualCaptionPair> as_original_records(const std::vector<PreferencePair>& pairs) {
  std::vector<DualCaptionPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({p.id, p.prompt, p.prompt, p.preferred, p.less_preferred, {}});
  }
  return out;
}

std::vector<PreferencePair> pairs_from_original(const std::vector<DualCaptionPair>& records) {
  std::vector<PreferencePair> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.provenance.kind != Provenance::Kind::Original || !(r.caption_w == r.caption_l)) {
      throw ConfigError("serialization", "record " + std::to_string(r.id) + " is not an original-prompt record");
    }
    out.push_back({r.id, r.caption_w, r.preferred, r.less_preferred});
  }
  return out;
}

// ---- CSV ----

std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  auto line = [](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    return s + '\n';
  };
  std::string out = line(header);
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw std::logic_error("csv_table: row width does not match header");
    out += line(row);
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  CsvTable table;
  if (!std::getline(in, line) || line.empty()) throw ConfigError("serialization", "CSV has no header row");
  table.header = split(line, ',');
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != table.header.size()) {
      throw ConfigError("serialization", "CSV row width does not match header");
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

std::string overlap_csv(const OverlapReport& r) {
  std::vector<std::string> header{"mu_w", "mu_l", "delta_mu"};
  std::vector<std::string> row{format_real(r.mu_w), format_real(r.mu_l), format_real(r.delta_mu)};
  for (int b = 0; b < kHistogramBins; ++b) {
    header.push_back("w_bin" + std::to_string(b));
    row.push_back(std::to_string(r.histogram_w[b]));
  }
  for (int b = 0; b < kHistogramBins; ++b) {
    header.push_back("l_bin" + std::to_string(b));
    row.push_back(std::to_string(r.histogram_l[b]));
  }
  return csv_table(header, {row});
}

OverlapReport read_overlap_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  if (t.rows.size() != 1 || t.header.size() != 3 + 2 * kHistogramBins || t.header[0] != "mu_w") {
    throw ConfigError("serialization", "not an overlap report CSV");
  }
  const auto& row = t.rows.front();
  OverlapReport r;
  r.mu_w = parse_real(row[0], "mu_w");
  r.mu_l = parse_real(row[1], "mu_l");
  r.delta_mu = parse_real(row[2], "delta_mu");
  for (int b = 0; b < kHistogramBins; ++b) {
    r.histogram_w[b] = static_cast<std::size_t>(parse_real(row[3 + b], "w_bin"));
    r.histogram_l[b] = static_cast<std::size_t>(parse_real(row[3 + kHistogramBins + b], "l_bin"));
  }
  return r;
}

}  // namespace dcpo
