// SPDX-License-Identifier: Apache-2.0
#include <cctype>
#include <fstream>
#include <string>

#include "dsvd/analysis.hpp"
#include "dsvd/error.hpp"

namespace dsvd {
namespace {

struct WindowStats {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double var_x = 0.0;
  double var_y = 0.0;
  double cov = 0.0;
};

WindowStats window_stats(const Matrix& x, const Matrix& y, std::size_t top, std::size_t left) {
  constexpr double count = static_cast<double>(kSsimWindow * kSsimWindow);
  WindowStats s;
  for (std::size_t r = top; r < top + kSsimWindow; ++r) {
    for (std::size_t c = left; c < left + kSsimWindow; ++c) {
      s.mean_x += x(r, c);
      s.mean_y += y(r, c);
    }
  }
  s.mean_x /= count;
  s.mean_y /= count;
  for (std::size_t r = top; r < top + kSsimWindow; ++r) {
    for (std::size_t c = left; c < left + kSsimWindow; ++c) {
      const double dx = x(r, c) - s.mean_x;
      const double dy = y(r, c) - s.mean_y;
      s.var_x += dx * dx;
      s.var_y += dy * dy;
      s.cov += dx * dy;
    }
  }
  s.var_x /= count;
  s.var_y /= count;
  s.cov /= count;
  return s;
}

}  // namespace

double ssim(const Matrix& x, const Matrix& y, double dynamic_range) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    raise(ErrorCode::DimensionMismatch, "ssim inputs differ in shape");
  if (!(dynamic_range > 0.0)) raise(ErrorCode::InvalidArgument, "ssim dynamic range must be positive");
  if (x.rows() < kSsimWindow || x.cols() < kSsimWindow)
    raise(ErrorCode::WindowTooLarge, "image " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                                         " is smaller than the 8x8 window");

  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
  const std::size_t rows = x.rows() - kSsimWindow + 1;
  const std::size_t cols = x.cols() - kSsimWindow + 1;
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const WindowStats s = window_stats(x, y, r, c);
      const double numerator = (2.0 * s.mean_x * s.mean_y + c1) * (2.0 * s.cov + c2);
      const double denominator = (s.mean_x * s.mean_x + s.mean_y * s.mean_y + c1) * (s.var_x + s.var_y + c2);
      total += numerator / denominator;
    }
  }
  return total / static_cast<double>(rows * cols);
}

Matrix read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");

  auto next_token = [&]() {
    std::string token;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in.get()) != EOF && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(ch)) {
        if (!token.empty()) break;
        continue;
      }
      token += static_cast<char>(ch);
    }
    if (token.empty()) raise(ErrorCode::InvalidArgument, "truncated PGM header in '" + path.string() + "'");
    return token;
  };

  const std::string magic = next_token();
  if (magic != "P5" && magic != "P2") raise(ErrorCode::InvalidArgument, "'" + path.string() + "' is not a PGM file");
  std::size_t width, height;
  unsigned long maxval;
  try {
    width = std::stoul(next_token());
    height = std::stoul(next_token());
    maxval = std::stoul(next_token());
  } catch (const std::exception&) {
    raise(ErrorCode::InvalidArgument, "bad PGM header in '" + path.string() + "'");
  }
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535)
    raise(ErrorCode::InvalidArgument, "unsupported PGM geometry in '" + path.string() + "'");

  Matrix image(height, width);
  if (magic == "P2") {
    for (double& v : image.values()) v = static_cast<double>(std::stoul(next_token()));
    return image;
  }
  const bool wide = maxval > 255;
  for (double& v : image.values()) {
    const int hi = in.get();
    const int lo = wide ? in.get() : 0;
    if (hi == EOF || lo == EOF) raise(ErrorCode::InvalidArgument, "truncated PGM pixel data in '" + path.string() + "'");
    v = wide ? static_cast<double>((hi << 8) | lo) : static_cast<double>(hi);
  }
  return image;
}

}  // namespace dsvd
