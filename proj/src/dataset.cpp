#include "harfuse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace harfuse {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

// Parses every whitespace-separated double on `line`. nan/inf tokens are
// legal here; they surface later through filter_invalid.
std::vector<double> parse_row(const std::string& line, const std::string& file, long line_no) {
  std::vector<double> values;
  const char* p = line.c_str();
  while (*p) {
    while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
    if (!*p) break;
    char* end = nullptr;
    const double v = std::strtod(p, &end);
    if (end == p)
      throw FormatError(file + ":" + std::to_string(line_no) + ": unparseable number near '" +
                        std::string(p).substr(0, 12) + "'");
    values.push_back(v);
    p = end;
  }
  return values;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

void renormalize_orientation(Matrix& q) {
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const double n = q.row(i).norm();
    q.row(i) /= n;  // zero rows become NaN and are caught by filter_invalid
  }
}

struct SynthSignal {
  // Distinct integer cycle count per class keeps FFT signatures clean.
  static double frequency(int class_index) { return 2.0 + 3.0 * class_index; }

  static double offset(int class_index, int modality, int channel) {
    return 0.6 * std::cos(2.0 * M_PI * (class_index + 2.0 * modality + 3.0 * channel) / 8.0);
  }

  static double phase(int modality, int channel) { return 0.7 * modality + 0.9 * channel; }

  // Orientation: rotate about a fixed per-class axis by an oscillating angle.
  static Eigen::Vector3d axis(int class_index) {
    Eigen::Vector3d u(std::cos(2.0 * M_PI * class_index / 8.0),
                      std::sin(2.0 * M_PI * class_index / 8.0), 0.5);
    return u.normalized();
  }

  static double angle(int class_index, int t) {
    return 0.9 * std::sin(2.0 * M_PI * frequency(class_index) * t / kWindowLength + 0.2);
  }
};

void write_quaternion_row(double* out, const Eigen::Vector3d& axis, double angle) {
  const double half = 0.5 * angle;
  out[0] = std::cos(half);
  out[1] = axis.x() * std::sin(half);
  out[2] = axis.y() * std::sin(half);
  out[3] = axis.z() * std::sin(half);
}

}  // namespace

double synth_signal(int class_index, int modality, int channel, int t) {
  if (modality == kOrientationIndex) {
    double q[4];
    write_quaternion_row(q, SynthSignal::axis(class_index), SynthSignal::angle(class_index, t));
    return q[channel];
  }
  return std::sin(2.0 * M_PI * SynthSignal::frequency(class_index) * t / kWindowLength +
                  SynthSignal::phase(modality, channel)) +
         SynthSignal::offset(class_index, modality, channel);
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  const fs::path base = fs::path(path).parent_path();

  DatasetManifest m;
  std::array<bool, kModalityCount> seen{};
  bool saw_split = false, saw_location = false, saw_samples = false;

  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ManifestError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    if (key == "split") {
      m.split = value;
      saw_split = true;
    } else if (key == "location") {
      m.location = value;
      saw_location = true;
    } else if (key == "samples") {
      char* end = nullptr;
      m.sample_count = std::strtol(value.c_str(), &end, 10);
      if (end == value.c_str() || *end != '\0' || m.sample_count < 0)
        throw ManifestError(path + ":" + std::to_string(line_no) + ": bad sample count '" +
                            value + "'");
      saw_samples = true;
    } else if (key == "labels") {
      m.label_path = (base / value).string();
    } else {
      const int k = modality_index(key);
      if (k < 0)
        throw ManifestError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
      m.modality_paths[static_cast<std::size_t>(k)] = (base / value).string();
      seen[static_cast<std::size_t>(k)] = true;
    }
  }

  if (!saw_split || !saw_location || !saw_samples)
    throw ManifestError(path + ": split, location and samples are required");
  for (int k = 0; k < kModalityCount; ++k) {
    if (!seen[static_cast<std::size_t>(k)])
      throw ManifestError(path + ": missing modality entry '" + modality_name(k) + "'");
    if (!fs::exists(m.modality_paths[static_cast<std::size_t>(k)]))
      throw ManifestError(path + ": referenced file does not exist: " +
                          m.modality_paths[static_cast<std::size_t>(k)]);
  }
  if (!m.label_path.empty() && !fs::exists(m.label_path))
    throw ManifestError(path + ": referenced label file does not exist: " + m.label_path);
  return m;
}

Dataset load_dataset(const DatasetManifest& manifest) {
  Dataset ds;
  ds.split = manifest.split;
  ds.location = manifest.location;
  ds.samples.resize(static_cast<std::size_t>(manifest.sample_count));

  for (int k = 0; k < kModalityCount; ++k) {
    const std::string& path = manifest.modality_paths[static_cast<std::size_t>(k)];
    const std::vector<std::string> lines = read_lines(path);
    if (static_cast<long>(lines.size()) != manifest.sample_count)
      throw ManifestError(path + ": has " + std::to_string(lines.size()) +
                          " rows, manifest declares " + std::to_string(manifest.sample_count));
    const int channels = modality_channels(k);
    for (long i = 0; i < manifest.sample_count; ++i) {
      const std::vector<double> row =
          parse_row(lines[static_cast<std::size_t>(i)], path, i + 1);
      if (static_cast<long>(row.size()) != static_cast<long>(kWindowLength) * channels)
        throw FormatError(path + ":" + std::to_string(i + 1) + ": expected " +
                          std::to_string(kWindowLength * channels) + " values, got " +
                          std::to_string(row.size()));
      Matrix block(kWindowLength, channels);
      std::copy(row.begin(), row.end(), block.data());
      if (k == kOrientationIndex) renormalize_orientation(block);
      ds.samples[static_cast<std::size_t>(i)].modalities[static_cast<std::size_t>(k)] =
          std::move(block);
    }
  }

  if (!manifest.label_path.empty()) {
    const std::vector<std::string> lines = read_lines(manifest.label_path);
    if (static_cast<long>(lines.size()) != manifest.sample_count)
      throw ManifestError(manifest.label_path + ": has " + std::to_string(lines.size()) +
                          " rows, manifest declares " + std::to_string(manifest.sample_count));
    for (long i = 0; i < manifest.sample_count; ++i) {
      const std::vector<double> row =
          parse_row(lines[static_cast<std::size_t>(i)], manifest.label_path, i + 1);
      if (row.size() != kSegmentsPerSample)
        throw FormatError(manifest.label_path + ":" + std::to_string(i + 1) + ": expected " +
                          std::to_string(kSegmentsPerSample) + " labels, got " +
                          std::to_string(row.size()));
      SensorSample& sample = ds.samples[static_cast<std::size_t>(i)];
      for (int j = 0; j < kSegmentsPerSample; ++j) {
        const double v = row[static_cast<std::size_t>(j)];
        const int one_based = static_cast<int>(v);
        if (v != one_based || one_based < 1 || one_based > kClassCount)
          throw FormatError(manifest.label_path + ":" + std::to_string(i + 1) +
                            ": label out of range (1.." + std::to_string(kClassCount) + ")");
        sample.labels[static_cast<std::size_t>(j)] = one_based - 1;  // 1-based on disk
      }
      sample.has_labels = true;
    }
  }
  return ds;
}

long filter_invalid(Dataset& dataset) {
  const auto is_invalid = [](const SensorSample& s) {
    return std::any_of(s.modalities.begin(), s.modalities.end(),
                       [](const Matrix& m) { return !m.allFinite(); });
  };
  const long before = static_cast<long>(dataset.samples.size());
  dataset.samples.erase(
      std::remove_if(dataset.samples.begin(), dataset.samples.end(), is_invalid),
      dataset.samples.end());
  return before - static_cast<long>(dataset.samples.size());
}

std::string synth_generate(const SynthConfig& config, const std::string& out_dir) {
  if (config.samples < 1) throw ConfigError("synth: sample count must be >= 1");
  if (config.classes != kClassCount)
    throw ConfigError("synth: class count must be " + std::to_string(kClassCount) +
                      " (the model is " + std::to_string(kClassCount) + "-class)");
  if (config.noise < 0.0) throw ConfigError("synth: noise sigma must be >= 0");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

  const Rng root = Rng(config.seed);
  char buf[32];

  std::array<std::ofstream, kModalityCount> files;
  std::array<std::string, kModalityCount> names;
  for (int k = 0; k < kModalityCount; ++k) {
    names[static_cast<std::size_t>(k)] = config.split + "_" + modality_name(k) + ".txt";
    const std::string path =
        (fs::path(out_dir) / names[static_cast<std::size_t>(k)]).string();
    files[static_cast<std::size_t>(k)].open(path);
    if (!files[static_cast<std::size_t>(k)]) throw IoError("cannot write " + path);
  }
  const std::string labels_name = config.split + "_labels.txt";
  std::ofstream labels_file((fs::path(out_dir) / labels_name).string());
  if (!labels_file) throw IoError("cannot write " + (fs::path(out_dir) / labels_name).string());

  for (long i = 0; i < config.samples; ++i) {
    const int y = static_cast<int>(i % config.classes);
    Rng sample_rng = root.fork(static_cast<std::uint64_t>(i));
    for (int k = 0; k < kModalityCount; ++k) {
      Rng noise_rng = sample_rng.fork(static_cast<std::uint64_t>(k));
      std::ofstream& out = files[static_cast<std::size_t>(k)];
      const int channels = modality_channels(k);
      for (int t = 0; t < kWindowLength; ++t) {
        if (k == kOrientationIndex) {
          // Noise perturbs the rotation angle so rows stay exactly unit norm.
          const double angle =
              SynthSignal::angle(y, t) + config.noise * 0.25 * noise_rng.normal();
          double q[4];
          write_quaternion_row(q, SynthSignal::axis(y), angle);
          for (int ch = 0; ch < channels; ++ch) {
            std::snprintf(buf, sizeof(buf), "%.10g", q[ch]);
            out << buf << (t == kWindowLength - 1 && ch == channels - 1 ? "" : " ");
          }
        } else {
          for (int ch = 0; ch < channels; ++ch) {
            const double v = synth_signal(y, k, ch, t) + config.noise * noise_rng.normal();
            std::snprintf(buf, sizeof(buf), "%.10g", v);
            out << buf << (t == kWindowLength - 1 && ch == channels - 1 ? "" : " ");
          }
        }
      }
      out << "\n";
    }
    for (int j = 0; j < kSegmentsPerSample; ++j)
      labels_file << (y + 1) << (j == kSegmentsPerSample - 1 ? "" : " ");
    labels_file << "\n";
  }

  for (auto& f : files)
    if (!f) throw IoError("write failure under " + out_dir);

  const std::string manifest_path =
      (fs::path(out_dir) / (config.split + ".manifest")).string();
  std::ofstream mf(manifest_path);
  if (!mf) throw IoError("cannot write " + manifest_path);
  mf << "split = " << config.split << "\n";
  mf << "location = " << config.location << "\n";
  mf << "samples = " << config.samples << "\n";
  for (int k = 0; k < kModalityCount; ++k)
    mf << modality_name(k) << " = " << names[static_cast<std::size_t>(k)] << "\n";
  mf << "labels = " << labels_name << "\n";
  if (!mf) throw IoError("write failure: " + manifest_path);
  return manifest_path;
}

}  // namespace harfuse
