#include "harfuse/transforms.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>

namespace harfuse {

InputMode input_mode_from_string(const std::string& name) {
  if (name == "raw") return InputMode::Raw;
  if (name == "fft") return InputMode::Fft;
  if (name == "raw_and_fft") return InputMode::RawAndFft;
  throw ConfigError("unknown input mode '" + name + "' (raw, fft, raw_and_fft)");
}

std::string to_string(InputMode mode) {
  switch (mode) {
    case InputMode::Raw: return "raw";
    case InputMode::Fft: return "fft";
    case InputMode::RawAndFft: return "raw_and_fft";
  }
  throw InternalError("unhandled input mode");
}

int input_mode_channel_factor(InputMode mode) {
  return mode == InputMode::RawAndFft ? 2 : 1;
}

Matrix fft_magnitude(const Matrix& channels) {
  const Eigen::Index n = channels.rows();
  Matrix out(n, channels.cols());
  Eigen::FFT<double> fft;
  std::vector<double> in(static_cast<std::size_t>(n));
  std::vector<std::complex<double>> spectrum;
  for (Eigen::Index c = 0; c < channels.cols(); ++c) {
    for (Eigen::Index t = 0; t < n; ++t) in[static_cast<std::size_t>(t)] = channels(t, c);
    if (n == 1) {
      out(0, c) = std::abs(in[0]);  // length-1 DFT is the identity
      continue;
    }
    fft.fwd(spectrum, in);
    for (Eigen::Index t = 0; t < n; ++t)
      out(t, c) = std::abs(spectrum[static_cast<std::size_t>(t)]);
  }
  return out;
}

SensorSample fft_transform(const SensorSample& sample) {
  SensorSample out = sample;
  for (auto& block : out.modalities) block = fft_magnitude(block);
  return out;
}

std::vector<Matrix> apply_input_mode(const SensorSample& sample, InputMode mode) {
  std::vector<Matrix> inputs;
  inputs.reserve(kModalityCount);
  for (const Matrix& block : sample.modalities) {
    switch (mode) {
      case InputMode::Raw:
        inputs.push_back(block);
        break;
      case InputMode::Fft:
        inputs.push_back(fft_magnitude(block));
        break;
      case InputMode::RawAndFft: {
        Matrix both(block.rows(), 2 * block.cols());
        both.leftCols(block.cols()) = block;
        both.rightCols(block.cols()) = fft_magnitude(block);
        inputs.push_back(std::move(both));
        break;
      }
    }
  }
  return inputs;
}

RotationAngles draw_rotation(Rng& rng) {
  RotationAngles a;
  a.yaw = rng.uniform(0.0, 2.0 * M_PI);
  a.pitch = rng.uniform(0.0, 2.0 * M_PI);
  a.roll = rng.uniform(0.0, 2.0 * M_PI);
  return a;
}

Eigen::Matrix3d rotation_matrix(const RotationAngles& angles) {
  return (Eigen::AngleAxisd(angles.yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(angles.pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(angles.roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

Eigen::Quaterniond quat_rotate(const Eigen::Quaterniond& q, const RotationAngles& angles) {
  if (q.norm() == 0.0) throw InputError("quat_rotate: zero quaternion");
  const Eigen::Quaterniond rotation(rotation_matrix(angles));
  Eigen::Quaterniond out = rotation * q.normalized();
  out.normalize();
  return out;
}

SensorSample apply_random_rotation(const SensorSample& sample, const RotationAngles& angles) {
  const Eigen::Matrix3d r = rotation_matrix(angles);
  SensorSample out = sample;
  for (int k = 0; k < kModalityCount; ++k) {
    if (k == kPressureIndex) continue;  // pressure carries no orientation
    Matrix& block = out.modalities[static_cast<std::size_t>(k)];
    if (k == kOrientationIndex) {
      for (Eigen::Index i = 0; i < block.rows(); ++i) {
        const Eigen::Quaterniond q(block(i, 0), block(i, 1), block(i, 2), block(i, 3));
        const Eigen::Quaterniond rotated = quat_rotate(q, angles);
        block(i, 0) = rotated.w();
        block(i, 1) = rotated.x();
        block(i, 2) = rotated.y();
        block(i, 3) = rotated.z();
      }
    } else {
      // Row vectors: v' = R v  <=>  block' = block * R^T.
      block = block * r.transpose();
    }
  }
  return out;
}

RotationAngles quat_to_euler(const Eigen::Quaterniond& q) {
  const Eigen::Quaterniond n = q.normalized();
  RotationAngles a;
  const double sin_pitch = 2.0 * (n.w() * n.y() - n.z() * n.x());
  a.yaw = std::atan2(2.0 * (n.w() * n.z() + n.x() * n.y()),
                     1.0 - 2.0 * (n.y() * n.y() + n.z() * n.z()));
  a.pitch = std::asin(std::clamp(sin_pitch, -1.0, 1.0));
  a.roll = std::atan2(2.0 * (n.w() * n.x() + n.y() * n.z()),
                      1.0 - 2.0 * (n.x() * n.x() + n.y() * n.y()));
  return a;
}

Eigen::Quaterniond euler_to_quat(const RotationAngles& angles) {
  return Eigen::Quaterniond(rotation_matrix(angles));
}

}  // namespace harfuse
