#include "orbitgrad/net.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include "orbitgrad/error.hpp"

namespace orbitgrad {

namespace {

struct Activations {
  Eigen::MatrixXd input, h1, h2, out;
};

// Eigen evaluates tanh on doubles one element at a time; this form vectorizes.
Eigen::MatrixXd tanh_of(const Eigen::MatrixXd& z) {
  return (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

Activations mlp_forward(const MlpParams& p, const Eigen::MatrixXd& x, const Eigen::VectorXd& t) {
  Activations a;
  a.input.resize(x.rows() + 1, x.cols());
  a.input.topRows(x.rows()) = x;
  a.input.row(x.rows()) = t.transpose();
  a.h1 = tanh_of((p.w1 * a.input).colwise() + p.b1);
  a.h2 = tanh_of((p.w2 * a.h1).colwise() + p.b2);
  a.out = (p.w3 * a.h2).colwise() + p.b3;
  return a;
}

void mlp_backward(const MlpParams& p, const Activations& a, const Eigen::MatrixXd& upstream, double sign,
                  MlpParams& g) {
  g.w3.noalias() += sign * upstream * a.h2.transpose();
  g.b3 += sign * upstream.rowwise().sum();
  const Eigen::MatrixXd dz2 = (p.w3.transpose() * upstream).cwiseProduct((1.0 - a.h2.array().square()).matrix());
  g.w2.noalias() += sign * dz2 * a.h1.transpose();
  g.b2 += sign * dz2.rowwise().sum();
  const Eigen::MatrixXd dz1 = (p.w2.transpose() * dz2).cwiseProduct((1.0 - a.h1.array().square()).matrix());
  g.w1.noalias() += sign * dz1 * a.input.transpose();
  g.b1 += sign * dz1.rowwise().sum();
}

template <class T>
void write_pod(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error(ErrorCode::InvalidInput, "truncated checkpoint");
  return v;
}

constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

MlpParams MlpParams::zeros(int dim, int hidden) {
  MlpParams p;
  p.w1 = Eigen::MatrixXd::Zero(hidden, dim + 1);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.w2 = Eigen::MatrixXd::Zero(hidden, hidden);
  p.b2 = Eigen::VectorXd::Zero(hidden);
  p.w3 = Eigen::MatrixXd::Zero(dim, hidden);
  p.b3 = Eigen::VectorXd::Zero(dim);
  return p;
}

MlpParams MlpParams::init(int dim, int hidden, Rng& rng) {
  if (dim < 1 || hidden < 1) throw Error(ErrorCode::InvalidShape, "network sizes must be positive");
  MlpParams p = zeros(dim, hidden);
  auto fill = [&](Eigen::MatrixXd& w) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = scale * rng.normal();
    }
  };
  fill(p.w1);
  fill(p.w2);
  fill(p.w3);
  return p;
}

std::size_t MlpParams::size() const {
  std::size_t n = 0;
  for_each([&](const auto& a) { n += static_cast<std::size_t>(a.size()); });
  return n;
}

Eigen::VectorXd MlpParams::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(size()));
  Eigen::Index off = 0;
  for_each([&](const auto& a) {
    flat.segment(off, a.size()) = a.reshaped();
    off += a.size();
  });
  return flat;
}

void MlpParams::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(size())) throw Error(ErrorCode::InvalidShape, "flat size mismatch");
  Eigen::Index off = 0;
  for_each([&](auto& a) {
    a.reshaped() = flat.segment(off, a.size());
    off += a.size();
  });
}

MlpParams& MlpParams::operator+=(const MlpParams& o) {
  w1 += o.w1; b1 += o.b1; w2 += o.w2; b2 += o.b2; w3 += o.w3; b3 += o.b3;
  return *this;
}

MlpParams& MlpParams::operator-=(const MlpParams& o) {
  w1 -= o.w1; b1 -= o.b1; w2 -= o.w2; b2 -= o.b2; w3 -= o.w3; b3 -= o.b3;
  return *this;
}

MlpParams& MlpParams::operator*=(double s) {
  w1 *= s; b1 *= s; w2 *= s; b2 *= s; w3 *= s; b3 *= s;
  return *this;
}

Eigen::MatrixXd Denoiser::forward(const Eigen::MatrixXd& xt, const Eigen::VectorXd& t_norm) const {
  if (xt.rows() != dim() || t_norm.size() != xt.cols()) throw Error(ErrorCode::InvalidShape, "denoiser input shape");
  Eigen::MatrixXd out = mlp_forward(params_, xt, t_norm).out;
  if (arch_ == Architecture::EquiReflect) out -= mlp_forward(params_, -xt, t_norm).out;
  return out;
}

std::vector<double> Denoiser::forward(std::span<const double> xt, double t_norm) const {
  Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(xt.data(), static_cast<Eigen::Index>(xt.size()));
  Eigen::VectorXd t = Eigen::VectorXd::Constant(1, t_norm);
  Eigen::MatrixXd y = forward(x, t);
  return {y.data(), y.data() + y.size()};
}

MlpParams Denoiser::backward(const Eigen::MatrixXd& xt, const Eigen::VectorXd& t_norm,
                             const Eigen::MatrixXd& upstream) const {
  if (xt.rows() != dim() || t_norm.size() != xt.cols() || upstream.rows() != dim() ||
      upstream.cols() != xt.cols()) {
    throw Error(ErrorCode::InvalidShape, "denoiser backward shape");
  }
  MlpParams g = MlpParams::zeros(dim(), params_.hidden());
  mlp_backward(params_, mlp_forward(params_, xt, t_norm), upstream, 1.0, g);
  if (arch_ == Architecture::EquiReflect) mlp_backward(params_, mlp_forward(params_, -xt, t_norm), upstream, -1.0, g);
  return g;
}

void save_checkpoint(const Denoiser& net, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::InvalidInput, "cannot open checkpoint for writing: " + path.string());
  os.write("OGCK", 4);
  write_pod<std::uint32_t>(os, kCheckpointVersion);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.architecture()));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.dim()));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.params().hidden()));
  net.params().for_each([&](const auto& a) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(a.rows()));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(a.cols()));
    os.write(reinterpret_cast<const char*>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(double)));
  });
  if (!os) throw Error(ErrorCode::InvalidInput, "failed writing checkpoint: " + path.string());
}

Denoiser load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::InvalidInput, "cannot open checkpoint: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "OGCK") throw Error(ErrorCode::InvalidInput, "not a checkpoint file");
  if (read_pod<std::uint32_t>(is) != kCheckpointVersion) throw Error(ErrorCode::InvalidInput, "unsupported version");
  const auto arch = read_pod<std::uint32_t>(is);
  if (arch > 1) throw Error(ErrorCode::InvalidInput, "unknown architecture tag");
  const auto dim = static_cast<int>(read_pod<std::uint32_t>(is));
  const auto hidden = static_cast<int>(read_pod<std::uint32_t>(is));
  MlpParams p = MlpParams::zeros(dim, hidden);
  p.for_each([&](auto& a) {
    const auto rows = read_pod<std::uint32_t>(is);
    const auto cols = read_pod<std::uint32_t>(is);
    if (rows != a.rows() || cols != a.cols()) throw Error(ErrorCode::InvalidInput, "checkpoint array shape");
    is.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(double)));
    if (!is) throw Error(ErrorCode::InvalidInput, "truncated checkpoint");
  });
  return Denoiser(static_cast<Architecture>(arch), std::move(p));
}

BatchDenoiser as_batch_denoiser(const Denoiser& net) {
  return [net](const Eigen::MatrixXd& x, double t_norm) {
    return net.forward(x, Eigen::VectorXd::Constant(x.cols(), t_norm));
  };
}

}  // namespace orbitgrad
