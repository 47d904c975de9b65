#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace clickseq {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

enum class ErrorKind { io, parse, schema, invalid_argument, numeric };

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library. The kind is what the CLI reports
/// in its machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

double logsumexp(std::span<const double> values);

/// Normalizes nonnegative weights onto the probability simplex subject to
/// every entry being at least `floor`. This is the exact maximizer of
/// sum_c w_c log p_c over the floored simplex, so EM steps that use it keep
/// the monotone-likelihood guarantee. All-zero weights yield the uniform
/// distribution.
std::vector<double> floored_normalize(std::span<const double> weights, double floor);

/// Draws from a symmetric or asymmetric Dirichlet distribution.
std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng);

/// Derives an independent stream seed from a base seed and a tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

/// Runs `body(chunk_begin, chunk_end, chunk_index)` over [0, n) split into
/// fixed-size chunks. Chunk boundaries do not depend on `threads`, so callers
/// that reduce per-chunk results in chunk order get bit-identical output for
/// any thread count.
void parallel_chunks(std::size_t n, std::size_t chunk_size, int threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
  return (n + chunk_size - 1) / chunk_size;
}

std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Splits one CSV record, honouring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

/// Formats a double with enough digits to round-trip.
std::string format_double(double value);

std::uint64_t fnv1a64(std::string_view data);

}  // namespace clickseq
