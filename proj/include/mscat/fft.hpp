#pragma once

// Thin RAII wrapper over FFTW for square 2D complex transforms. Plans are
// created once (FFTW's planner is not thread-safe, so creation is serialized)
// and executed through the new-array interface on caller-owned buffers, which
// makes concurrent execution from several threads safe.

#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "mscat/errors.hpp"

namespace mscat {

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

class Fft2d {
 public:
  explicit Fft2d(int side) : side_(side) {
    std::vector<std::complex<double>> scratch(static_cast<std::size_t>(side) * side);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward_ = fftw_plan_dft_2d(side, side, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward_ = fftw_plan_dft_2d(side, side, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (forward_ == nullptr || backward_ == nullptr) throw Error("FFTW plan creation failed");
  }
  ~Fft2d() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  int side() const { return side_; }

  /// In-place unnormalized forward transform of a side*side row-major buffer.
  void forward(std::vector<std::complex<double>>& data) const { run(forward_, data); }
  /// In-place unnormalized inverse transform (result scaled by side^2).
  void backward(std::vector<std::complex<double>>& data) const { run(backward_, data); }

 private:
  void run(fftw_plan plan, std::vector<std::complex<double>>& data) const {
    if (data.size() != static_cast<std::size_t>(side_) * side_) {
      throw ValidationError("FFT buffer size does not match the plan");
    }
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, buf, buf);
  }

  int side_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace mscat
