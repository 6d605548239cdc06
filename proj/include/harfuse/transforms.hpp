#pragma once

#include "harfuse/dataset.hpp"
#include "harfuse/rng.hpp"
#include "harfuse/types.hpp"

#include <Eigen/Geometry>

#include <string>
#include <vector>

namespace harfuse {

enum class InputMode { Raw, Fft, RawAndFft };

InputMode input_mode_from_string(const std::string& name);
std::string to_string(InputMode mode);

/// Column-wise DFT magnitude; output shape equals input shape.
Matrix fft_magnitude(const Matrix& channels);

/// Replaces every sensor channel by the magnitude of its full-length DFT.
SensorSample fft_transform(const SensorSample& sample);

/// Per-modality inputs the model actually consumes: raw channels, their DFT
/// magnitudes, or both concatenated channel-wise (doubling the channel
/// count).
std::vector<Matrix> apply_input_mode(const SensorSample& sample, InputMode mode);
int input_mode_channel_factor(InputMode mode);

struct RotationAngles {
  double yaw = 0.0;    // about z
  double pitch = 0.0;  // about y
  double roll = 0.0;   // about x
};

/// Angles uniform on [0, 2*pi) per axis.
RotationAngles draw_rotation(Rng& rng);

/// R = Rz(yaw) * Ry(pitch) * Rx(roll).
Eigen::Matrix3d rotation_matrix(const RotationAngles& angles);

/// Left-composes the augmentation rotation with the orientation quaternion
/// (w, x, y, z order). Result is renormalized to unit length.
Eigen::Quaterniond quat_rotate(const Eigen::Quaterniond& q, const RotationAngles& angles);

/// One rigid rotation for the whole window: every 3-channel modality row is
/// mapped through the rotation matrix, orientation rows through quat_rotate,
/// pressure is left untouched.
SensorSample apply_random_rotation(const SensorSample& sample, const RotationAngles& angles);

// Explicit Euler round trip, kept as a cross-check utility; the pipeline
// composes quaternions directly.
RotationAngles quat_to_euler(const Eigen::Quaterniond& q);
Eigen::Quaterniond euler_to_quat(const RotationAngles& angles);

}  // namespace harfuse
