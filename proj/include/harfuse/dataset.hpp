#pragma once

#include "harfuse/rng.hpp"
#include "harfuse/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace harfuse {

/// One 5-second window of all seven sensors plus its per-second labels.
/// Modality blocks are kWindowLength x channels in the fixed sensor order.
struct SensorSample {
  std::array<Matrix, kModalityCount> modalities;
  std::array<int, kSegmentsPerSample> labels{};  // 0-based class indices
  bool has_labels = false;
};

struct DatasetManifest {
  std::string split;
  std::string location;  // Bag / Hips / Torso / Hand
  long sample_count = 0;
  std::array<std::string, kModalityCount> modality_paths;  // resolved absolute-ish paths
  std::string label_path;                                  // empty for unlabeled splits
};

struct Dataset {
  std::string split;
  std::string location;
  std::vector<SensorSample> samples;
};

/// Parses the key-value manifest and checks that every referenced file
/// exists. Paths in the file are taken relative to the manifest directory.
DatasetManifest read_manifest(const std::string& path);

/// Loads every sample in file order. Orientation rows are renormalized to
/// unit quaternions here. Row-count disagreement across files raises
/// ManifestError; an unparseable token raises FormatError naming file and
/// line.
Dataset load_dataset(const DatasetManifest& manifest);

/// Drops samples containing any non-finite value, preserving order.
/// Returns the number of samples dropped.
long filter_invalid(Dataset& dataset);

struct SynthConfig {
  long samples = 0;
  int classes = kClassCount;
  double noise = 0.0;  // additive sigma; orientation takes it as angle jitter
  std::uint64_t seed = 0;
  std::string split = "train";
  std::string location = "Bag";
};

/// Writes a synthetic dataset (7 modality files, labels, manifest) under
/// out_dir and returns the manifest path. Sample i carries class i mod 8;
/// each class has a distinct sinusoid frequency and distinct per-channel
/// offsets, so the noiseless task is exactly learnable. Same config, same
/// bytes.
std::string synth_generate(const SynthConfig& config, const std::string& out_dir);

/// Noiseless per-class signal value used by the generator (exposed for
/// oracle-style checks). Modality k, channel ch, time t.
double synth_signal(int class_index, int modality, int channel, int t);

}  // namespace harfuse
