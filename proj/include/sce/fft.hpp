#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sce::detail {

/// In-place complex FFT plans for one (dim, n) torus shape.
///
/// FFTW's planner is not reentrant, so plan creation is serialized through a
/// process-wide registry. Execution goes through the new-array interface,
/// which FFTW documents as thread-safe, so any number of workers may share a
/// plan once it exists.
class FftPlan {
 public:
  FftPlan(int dim, int n) : dim_(dim), n_(n) {
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(n);
    std::vector<std::complex<double>> scratch(total);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (dim == 1) {
      forward_ = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, flags);
      backward_ = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, flags);
    } else if (dim == 2) {
      forward_ = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, flags);
      backward_ = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, flags);
    } else {
      throw std::invalid_argument("FFT: only dim 1 and 2 are supported");
    }
    if (forward_ == nullptr || backward_ == nullptr) {
      throw std::runtime_error("FFT: plan creation failed");
    }
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  // Unnormalized: backward(forward(x)) == n^dim * x.
  void forward(std::vector<std::complex<double>>& data) const { run(forward_, data); }
  void backward(std::vector<std::complex<double>>& data) const { run(backward_, data); }

  int dim() const { return dim_; }
  int n() const { return n_; }

 private:
  static void run(fftw_plan plan, std::vector<std::complex<double>>& data) {
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, buf, buf);
  }

  int dim_;
  int n_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

inline const FftPlan& fft_plan(int dim, int n) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<FftPlan>> plans;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = plans[{dim, n}];
  if (!slot) slot = std::make_unique<FftPlan>(dim, n);
  return *slot;
}

}  // namespace sce::detail
