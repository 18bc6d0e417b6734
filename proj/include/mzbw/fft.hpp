#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

#include "mzbw/grid.hpp"

namespace mzbw {

namespace detail {
// The FFTW planner is not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// In-place complex DFT over all active axes of a grid.
///
/// Owns an aligned work buffer and a forward/backward plan pair built with
/// FFTW_ESTIMATE, so plan choice never depends on timing and repeated runs
/// are bit-identical. The backward transform is normalized.
class Fft {
 public:
  explicit Fft(const Grid& grid) : size_(grid.size()) {
    buffer_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size_));
    if (buffer_ == nullptr) throw std::bad_alloc();
    int n[3];
    const int rank = static_cast<int>(grid.dims());
    for (int k = 0; k < rank; ++k) n[k] = static_cast<int>(grid.points(static_cast<std::size_t>(k)));
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward_ = fftw_plan_dft(rank, n, buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft(rank, n, buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  ~Fft() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buffer_);
  }

  std::span<std::complex<double>> data() {
    return {reinterpret_cast<std::complex<double>*>(buffer_), size_};
  }

  void forward() { fftw_execute(forward_); }

  void backward() {
    fftw_execute(backward_);
    const double inv = 1.0 / static_cast<double>(size_);
    for (auto& v : data()) v *= inv;
  }

 private:
  std::size_t size_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace mzbw
