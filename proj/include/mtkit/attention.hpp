#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

namespace mtkit::attention {

// Dense row-major matrix. Construction rejects NaN/Inf entries.
template <typename T>
class Mat {
 public:
  Mat(int rows, int cols);
  Mat(int rows, int cols, std::vector<T> data);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  T& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& at(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

 private:
  int rows_;
  int cols_;
  std::vector<T> data_;
};

using Matrix = Mat<double>;
using MatrixF = Mat<float>;

struct AttentionConfig {
  int d_k = 1;       // scale divisor (key dimension)
  int tile_rows = 64;
  int tile_cols = 64;
};

// Instrumentation for the memory claims: the largest score buffer any
// single worker held, in elements.
struct KernelStats {
  std::size_t peak_score_buffer_elems = 0;
};

// Row-wise stable softmax (max subtraction); every output row sums to 1.
template <typename T>
Mat<T> softmax_rows(const Mat<T>& m);

template <typename T>
std::tuple<Mat<T>, Mat<T>, Mat<T>> project_qkv(const Mat<T>& x,
                                               const Mat<T>& w_q,
                                               const Mat<T>& w_k,
                                               const Mat<T>& w_v);

// Serial reference: materializes the full N_q x N_k score matrix. This is
// the oracle the tiled kernel is tested against.
template <typename T>
Mat<T> naive_attention(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v,
                       int d_k, KernelStats* stats = nullptr);

// Online-softmax tiling: K/V are consumed in column tiles while per-row
// running (max, normalizer, weighted sum) accumulators are rescaled, so no
// worker ever materializes more than tile_rows x tile_cols scores. Query
// row blocks run in parallel; each block's accumulators are worker-local,
// so the result does not depend on the thread count.
template <typename T>
Mat<T> tiled_attention(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v,
                       const AttentionConfig& config,
                       KernelStats* stats = nullptr);

extern template class Mat<double>;
extern template class Mat<float>;
extern template Mat<double> softmax_rows(const Mat<double>&);
extern template Mat<float> softmax_rows(const Mat<float>&);
extern template std::tuple<Mat<double>, Mat<double>, Mat<double>> project_qkv(
    const Mat<double>&, const Mat<double>&, const Mat<double>&,
    const Mat<double>&);
extern template std::tuple<Mat<float>, Mat<float>, Mat<float>> project_qkv(
    const Mat<float>&, const Mat<float>&, const Mat<float>&, const Mat<float>&);
extern template Mat<double> naive_attention(const Mat<double>&,
                                            const Mat<double>&,
                                            const Mat<double>&, int,
                                            KernelStats*);
extern template Mat<float> naive_attention(const Mat<float>&, const Mat<float>&,
                                           const Mat<float>&, int,
                                           KernelStats*);
extern template Mat<double> tiled_attention(const Mat<double>&,
                                            const Mat<double>&,
                                            const Mat<double>&,
                                            const AttentionConfig&,
                                            KernelStats*);
extern template Mat<float> tiled_attention(const Mat<float>&, const Mat<float>&,
                                           const Mat<float>&,
                                           const AttentionConfig&,
                                           KernelStats*);

struct BenchRow {
  std::string kernel;  // "naive" or "tiled"
  int n = 0;
  int d = 0;
  int tile_rows = 0;  // 0 for the naive reference rows
  int tile_cols = 0;
  std::int64_t wall_ns = 0;
  std::size_t peak_buffer_elems = 0;
  double max_abs_diff = 0.0;  // tiled vs naive; 0 on reference rows
};

struct BenchOptions {
  std::vector<std::pair<int, int>> sizes;          // (N, d)
  std::vector<std::pair<int, int>> tile_configs;   // (tile_rows, tile_cols)
  int repeats = 3;
  std::uint64_t seed = 42;
  bool single_precision = false;
};

// One naive reference row per size, then one tiled row per tile config,
// timed as the minimum over `repeats` runs on seeded random inputs.
std::vector<BenchRow> attention_bench(const BenchOptions& options);

inline constexpr const char* kBenchCsvHeader =
    "kernel,N,d,tile_rows,tile_cols,wall_ns,peak_buffer_elems,max_abs_diff";

std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace mtkit::attention
