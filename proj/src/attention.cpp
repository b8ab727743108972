#include "mtkit/attention.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "mtkit/errors.hpp"
#include "mtkit/rng.hpp"

namespace mtkit::attention {

namespace {

template <typename T>
void check_finite(const std::vector<T>& data) {
  for (const T v : data) {
    if (!std::isfinite(v)) {
      throw parameter_error("matrix entries must be finite");
    }
  }
}

std::string shape_string(int rows, int cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename T>
void check_attention_shapes(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v,
                            int d_k) {
  if (d_k < 1) throw parameter_error("d_k must be positive");
  if (q.cols() != k.cols()) {
    throw shape_error("Q is " + shape_string(q.rows(), q.cols()) +
                      " but K is " + shape_string(k.rows(), k.cols()));
  }
  if (k.rows() != v.rows()) {
    throw shape_error("K is " + shape_string(k.rows(), k.cols()) +
                      " but V is " + shape_string(v.rows(), v.cols()));
  }
}

// Dot product of q row i and k row j (K used as its transpose).
template <typename T>
T row_dot(const Mat<T>& q, int i, const Mat<T>& k, int j) {
  T sum = 0;
  for (int c = 0; c < q.cols(); ++c) sum += q.at(i, c) * k.at(j, c);
  return sum;
}

}  // namespace

template <typename T>
Mat<T>::Mat(int rows, int cols)
    : rows_(rows), cols_(cols),
      data_(static_cast<std::size_t>(rows) * cols, T{0}) {
  if (rows < 1 || cols < 1) throw parameter_error("matrix dimensions must be positive");
}

template <typename T>
Mat<T>::Mat(int rows, int cols, std::vector<T> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows < 1 || cols < 1) throw parameter_error("matrix dimensions must be positive");
  if (data_.size() != static_cast<std::size_t>(rows) * cols) {
    throw shape_error("expected " + std::to_string(rows * cols) +
                      " entries for " + shape_string(rows, cols) + ", got " +
                      std::to_string(data_.size()));
  }
  check_finite(data_);
}

template <typename T>
Mat<T> softmax_rows(const Mat<T>& m) {
  Mat<T> out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i) {
    T row_max = m.at(i, 0);
    for (int j = 1; j < m.cols(); ++j) row_max = std::max(row_max, m.at(i, j));
    T denom = 0;
    for (int j = 0; j < m.cols(); ++j) {
      const T e = std::exp(m.at(i, j) - row_max);
      out.at(i, j) = e;
      denom += e;
    }
    for (int j = 0; j < m.cols(); ++j) out.at(i, j) /= denom;
  }
  return out;
}

template <typename T>
std::tuple<Mat<T>, Mat<T>, Mat<T>> project_qkv(const Mat<T>& x,
                                               const Mat<T>& w_q,
                                               const Mat<T>& w_k,
                                               const Mat<T>& w_v) {
  const auto multiply = [&x](const Mat<T>& w) {
    if (x.cols() != w.rows()) {
      throw shape_error("X is " + shape_string(x.rows(), x.cols()) +
                        " but W is " + shape_string(w.rows(), w.cols()));
    }
    Mat<T> out(x.rows(), w.cols());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < x.rows(); ++i) {
      for (int inner = 0; inner < x.cols(); ++inner) {
        const T xi = x.at(i, inner);
        for (int j = 0; j < w.cols(); ++j) {
          out.at(i, j) += xi * w.at(inner, j);
        }
      }
    }
    return out;
  };
  return {multiply(w_q), multiply(w_k), multiply(w_v)};
}

template <typename T>
Mat<T> naive_attention(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v,
                       int d_k, KernelStats* stats) {
  check_attention_shapes(q, k, v, d_k);
  const T scale = T(1) / std::sqrt(static_cast<T>(d_k));
  const int n_q = q.rows();
  const int n_k = k.rows();

  // The full score matrix; this is the memory-hungry part.
  Mat<T> scores(n_q, n_k);
  if (stats) {
    stats->peak_score_buffer_elems =
        static_cast<std::size_t>(n_q) * static_cast<std::size_t>(n_k);
  }
  for (int i = 0; i < n_q; ++i) {
    for (int j = 0; j < n_k; ++j) {
      scores.at(i, j) = row_dot(q, i, k, j) * scale;
    }
  }
  const Mat<T> weights = softmax_rows(scores);

  Mat<T> out(n_q, v.cols());
  for (int i = 0; i < n_q; ++i) {
    for (int j = 0; j < n_k; ++j) {
      const T w = weights.at(i, j);
      for (int c = 0; c < v.cols(); ++c) out.at(i, c) += w * v.at(j, c);
    }
  }
  return out;
}

template <typename T>
Mat<T> tiled_attention(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v,
                       const AttentionConfig& config, KernelStats* stats) {
  check_attention_shapes(q, k, v, config.d_k);
  if (config.tile_rows < 1 || config.tile_cols < 1) {
    throw parameter_error("tile sizes must be >= 1");
  }
  const T scale = T(1) / std::sqrt(static_cast<T>(config.d_k));
  const int n_q = q.rows();
  const int n_k = k.rows();
  const int d_v = v.cols();
  const int tile_rows = config.tile_rows;
  const int tile_cols = config.tile_cols;
  const std::size_t buffer_elems =
      static_cast<std::size_t>(tile_rows) * static_cast<std::size_t>(tile_cols);

  Mat<T> out(n_q, d_v);
  const int row_blocks = (n_q + tile_rows - 1) / tile_rows;

#pragma omp parallel for schedule(static)
  for (int block = 0; block < row_blocks; ++block) {
    const int row_begin = block * tile_rows;
    const int row_end = std::min(row_begin + tile_rows, n_q);
    const int rows_here = row_end - row_begin;

    // Worker-local state: one score tile plus per-row accumulators.
    std::vector<T> scores(buffer_elems);
    std::vector<T> running_max(rows_here,
                               -std::numeric_limits<T>::infinity());
    std::vector<T> normalizer(rows_here, T{0});
    std::vector<T> acc(static_cast<std::size_t>(rows_here) * d_v, T{0});

    for (int col_begin = 0; col_begin < n_k; col_begin += tile_cols) {
      const int col_end = std::min(col_begin + tile_cols, n_k);
      const int cols_here = col_end - col_begin;

      for (int r = 0; r < rows_here; ++r) {
        for (int c = 0; c < cols_here; ++c) {
          scores[static_cast<std::size_t>(r) * tile_cols + c] =
              row_dot(q, row_begin + r, k, col_begin + c) * scale;
        }
      }

      for (int r = 0; r < rows_here; ++r) {
        T tile_max = -std::numeric_limits<T>::infinity();
        for (int c = 0; c < cols_here; ++c) {
          tile_max = std::max(
              tile_max, scores[static_cast<std::size_t>(r) * tile_cols + c]);
        }
        const T new_max = std::max(running_max[r], tile_max);
        // exp(-inf) = 0 covers the first tile, where nothing has
        // accumulated yet.
        const T rescale = std::exp(running_max[r] - new_max);
        normalizer[r] *= rescale;
        for (int c = 0; c < d_v; ++c) {
          acc[static_cast<std::size_t>(r) * d_v + c] *= rescale;
        }
        for (int c = 0; c < cols_here; ++c) {
          const T p = std::exp(
              scores[static_cast<std::size_t>(r) * tile_cols + c] - new_max);
          normalizer[r] += p;
          const int key_row = col_begin + c;
          for (int vc = 0; vc < d_v; ++vc) {
            acc[static_cast<std::size_t>(r) * d_v + vc] +=
                p * v.at(key_row, vc);
          }
        }
        running_max[r] = new_max;
      }
    }

    for (int r = 0; r < rows_here; ++r) {
      for (int c = 0; c < d_v; ++c) {
        out.at(row_begin + r, c) =
            acc[static_cast<std::size_t>(r) * d_v + c] / normalizer[r];
      }
    }
  }

  if (stats) stats->peak_score_buffer_elems = buffer_elems;
  return out;
}

template class Mat<double>;
template class Mat<float>;
template Mat<double> softmax_rows(const Mat<double>&);
template Mat<float> softmax_rows(const Mat<float>&);
template std::tuple<Mat<double>, Mat<double>, Mat<double>> project_qkv(
    const Mat<double>&, const Mat<double>&, const Mat<double>&,
    const Mat<double>&);
template std::tuple<Mat<float>, Mat<float>, Mat<float>> project_qkv(
    const Mat<float>&, const Mat<float>&, const Mat<float>&, const Mat<float>&);
template Mat<double> naive_attention(const Mat<double>&, const Mat<double>&,
                                     const Mat<double>&, int, KernelStats*);
template Mat<float> naive_attention(const Mat<float>&, const Mat<float>&,
                                    const Mat<float>&, int, KernelStats*);
template Mat<double> tiled_attention(const Mat<double>&, const Mat<double>&,
                                     const Mat<double>&,
                                     const AttentionConfig&, KernelStats*);
template Mat<float> tiled_attention(const Mat<float>&, const Mat<float>&,
                                    const Mat<float>&, const AttentionConfig&,
                                    KernelStats*);

namespace {

Matrix random_matrix(int rows, int cols, Xoshiro256& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      // Uniform in [-1, 1) from the top 53 bits.
      const double u =
          static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
      m.at(i, j) = 2.0 * u - 1.0;
    }
  }
  return m;
}

template <typename F>
std::int64_t best_wall_ns(int repeats, F&& run) {
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (int i = 0; i < repeats; ++i) {
    const auto start = std::chrono::steady_clock::now();
    run();
    const auto stop = std::chrono::steady_clock::now();
    best = std::min(
        best, std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start)
                  .count());
  }
  return best;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

MatrixF to_single(const Matrix& m) {
  std::vector<float> data(m.data().begin(), m.data().end());
  return MatrixF(m.rows(), m.cols(), std::move(data));
}

Matrix to_double(const MatrixF& m) {
  std::vector<double> data(m.data().begin(), m.data().end());
  return Matrix(m.rows(), m.cols(), std::move(data));
}

}  // namespace

std::vector<BenchRow> attention_bench(const BenchOptions& options) {
  if (options.sizes.empty()) throw parameter_error("no sizes given");
  if (options.tile_configs.empty()) throw parameter_error("no tile configs given");
  if (options.repeats < 1) throw parameter_error("repeats must be >= 1");
  for (const auto& [n, d] : options.sizes) {
    if (n < 1 || d < 1) throw parameter_error("sizes must be positive");
  }
  for (const auto& [tr, tc] : options.tile_configs) {
    if (tr < 1 || tc < 1) throw parameter_error("tile sizes must be positive");
  }

  std::vector<BenchRow> rows;
  Xoshiro256 rng(options.seed);
  for (const auto& [n, d] : options.sizes) {
    const Matrix q = random_matrix(n, d, rng);
    const Matrix k = random_matrix(n, d, rng);
    const Matrix v = random_matrix(n, d, rng);
    const MatrixF qf = to_single(q), kf = to_single(k), vf = to_single(v);

    KernelStats naive_stats;
    Matrix reference(1, 1);
    const auto run_naive = [&] {
      reference = options.single_precision
                      ? to_double(naive_attention(qf, kf, vf, d, &naive_stats))
                      : naive_attention(q, k, v, d, &naive_stats);
    };
    const std::int64_t naive_ns = best_wall_ns(options.repeats, run_naive);
    rows.push_back({"naive", n, d, 0, 0, naive_ns,
                    naive_stats.peak_score_buffer_elems, 0.0});

    for (const auto& [tr, tc] : options.tile_configs) {
      const AttentionConfig config{d, tr, tc};
      KernelStats tiled_stats;
      Matrix result(1, 1);
      const auto run_tiled = [&] {
        result =
            options.single_precision
                ? to_double(tiled_attention(qf, kf, vf, config, &tiled_stats))
                : tiled_attention(q, k, v, config, &tiled_stats);
      };
      const std::int64_t tiled_ns = best_wall_ns(options.repeats, run_tiled);
      rows.push_back({"tiled", n, d, tr, tc, tiled_ns,
                      tiled_stats.peak_score_buffer_elems,
                      max_abs_diff(result, reference)});
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << kBenchCsvHeader << '\n';
  for (const BenchRow& row : rows) {
    char diff[32];
    std::snprintf(diff, sizeof(diff), "%.3e", row.max_abs_diff);
    out << row.kernel << ',' << row.n << ',' << row.d << ',' << row.tile_rows
        << ',' << row.tile_cols << ',' << row.wall_ns << ','
        << row.peak_buffer_elems << ',' << diff << '\n';
  }
  return out.str();
}

}  // namespace mtkit::attention
