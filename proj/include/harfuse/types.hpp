#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>

namespace harfuse {

// All numeric work runs in double precision on dense row-major storage,
// so a sample's [time x channel] block maps directly onto file layout and
// checkpoint bytes.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// One 5-second window: 500 readings per channel at 100 Hz.
inline constexpr int kWindowLength = 500;
/// Decisions per window, one per second.
inline constexpr int kSegmentsPerSample = 5;
/// Locomotion/transportation classes.
inline constexpr int kClassCount = 8;

inline constexpr int kModalityCount = 7;

/// Channel count per sensor, in the fixed sensor order used everywhere
/// concatenation order matters.
inline constexpr std::array<int, kModalityCount> kModalityChannels{3, 3, 3, 3, 3, 4, 1};

inline constexpr std::array<const char*, kModalityCount> kModalityNames{
    "accelerometer", "gravity",       "gyroscope", "linear_accelerometer",
    "magnetometer",  "orientation",   "pressure"};

inline constexpr int kOrientationIndex = 5;
inline constexpr int kPressureIndex = 6;

// Error vocabulary. The CLI maps these onto its exit-code contract.

/// Invalid configuration (bad layer chain, bad probabilities, bad flags).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid data handed to an operation (bad labels, missing modality).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unparseable file contents; message carries file and line.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Manifest inconsistency (missing files, row-count disagreement).
struct ManifestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Broken internal invariant; indicates a bug, not bad input.
struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Training abort (non-finite loss or gradient).
struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem failure; message carries the path.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline int modality_channels(int k) { return kModalityChannels.at(static_cast<std::size_t>(k)); }

inline std::string modality_name(int k) {
  return kModalityNames.at(static_cast<std::size_t>(k));
}

/// Index of the named sensor, or -1.
int modality_index(const std::string& name);

}  // namespace harfuse
