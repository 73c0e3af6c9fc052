#include "framemine/nn/graph.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <map>
#include <stdexcept>

namespace fm::nn {

namespace {

enum OpCode : int {
  kInput,
  kParam,
  kMatMul,
  kMatMulT,
  kLinearPointwise,
  kAdd,
  kSub,
  kMul,
  kAddBroadcast,
  kMulBroadcast,
  kScale,
  kAddScalar,
  kRelu,
  kExp,
  kLog,
  kSquare,
  kPowScalar,
  kMin,
  kClip,
  kCross3,
  kSegmentedMax,
  kSoftmaxRows,
  kSoftmaxExpertBlocks,
  kLayerNorm,
  kConcatCols,
  kConcatRows,
  kSliceCols,
  kSliceRows,
  kSum,
  kMean,
  kRowwiseSum,
};

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

int ParamStore::add(const std::string& name, Mat init) {
  require(index_of(name) < 0, "ParamStore: duplicate parameter name");
  Param p;
  p.name = name;
  p.adam_m = Mat::Zero(init.rows(), init.cols());
  p.adam_v = Mat::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  params_.push_back(std::move(p));
  return static_cast<int>(params_.size()) - 1;
}

int ParamStore::index_of(const std::string& name) const {
  for (size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int64_t ParamStore::total_scalars() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

GradBuffer::GradBuffer(const ParamStore& store) {
  grads_.reserve(store.size());
  for (int i = 0; i < store.size(); ++i) {
    grads_.emplace_back(
        Mat::Zero(store.at(i).value.rows(), store.at(i).value.cols()));
  }
}

void GradBuffer::zero() {
  for (auto& g : grads_) g.setZero();
}

void GradBuffer::add(const GradBuffer& other) {
  require(other.size() == size(), "GradBuffer: size mismatch");
  for (size_t i = 0; i < grads_.size(); ++i) grads_[i] += other.grads_[i];
}

double GradBuffer::global_norm() const {
  double sq = 0.0;
  for (const auto& g : grads_) sq += g.squaredNorm();
  return std::sqrt(sq);
}

void GradBuffer::scale(double s) {
  for (auto& g : grads_) g *= s;
}

void Graph::clear() { nodes_.clear(); }

NodeId Graph::push(Node nd) {
  nodes_.push_back(std::move(nd));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

const Mat& Graph::value(NodeId n) const { return val(n); }

double Graph::scalar(NodeId n) const {
  const Mat& v = val(n);
  require(v.size() == 1, "scalar: node is not 1x1");
  return v(0, 0);
}

Mat& Graph::grad_of(NodeId n) {
  Node& nd = nodes_[n];
  const Mat& v = val(n);
  if (nd.grad.rows() != v.rows() || nd.grad.cols() != v.cols()) {
    nd.grad = Mat::Zero(v.rows(), v.cols());
  }
  return nd.grad;
}

NodeId Graph::input(Mat v) {
  Node nd;
  nd.op = kInput;
  nd.val = std::move(v);
  return push(std::move(nd));
}

NodeId Graph::param(int param_index) {
  require(params_ != nullptr, "param: graph has no ParamStore");
  require(param_index >= 0 && param_index < params_->size(),
          "param: index out of range");
  Node nd;
  nd.op = kParam;
  nd.i0 = param_index;
  nd.ext = &params_->at(param_index).value;
  return push(std::move(nd));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  require(val(a).cols() == val(b).rows(), "matmul: inner dim mismatch");
  Node nd;
  nd.op = kMatMul;
  nd.a = a;
  nd.b = b;
  nd.val.noalias() = val(a) * val(b);
  return push(std::move(nd));
}

NodeId Graph::matmul_t(NodeId a, NodeId b) {
  require(val(a).cols() == val(b).cols(), "matmul_t: inner dim mismatch");
  Node nd;
  nd.op = kMatMulT;
  nd.a = a;
  nd.b = b;
  nd.val.noalias() = val(a) * val(b).transpose();
  return push(std::move(nd));
}

NodeId Graph::linear_pointwise(NodeId x, NodeId w, NodeId b) {
  require(val(x).cols() == val(w).rows(), "linear_pointwise: dim mismatch");
  require(val(b).rows() == 1 && val(b).cols() == val(w).cols(),
          "linear_pointwise: bias shape");
  Node nd;
  nd.op = kLinearPointwise;
  nd.a = x;
  nd.b = w;
  nd.c = b;
  const Mat& xv = val(x);
  const Mat& wv = val(w);
  const Mat& bv = val(b);
  const Eigen::Index rows = xv.rows(), in = xv.cols(), out = wv.cols();
  nd.val.resize(rows, out);
  Eigen::VectorXd row_buf(in);
  for (Eigen::Index i = 0; i < rows; ++i) {
    row_buf = xv.row(i).transpose();
    for (Eigen::Index j = 0; j < out; ++j) {
      nd.val(i, j) = row_buf.dot(wv.col(j)) + bv(0, j);
    }
  }
  return push(std::move(nd));
}

NodeId Graph::add(NodeId a, NodeId b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(),
          "add: shape mismatch");
  Node nd;
  nd.op = kAdd;
  nd.a = a;
  nd.b = b;
  nd.val = val(a) + val(b);
  return push(std::move(nd));
}

NodeId Graph::sub(NodeId a, NodeId b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(),
          "sub: shape mismatch");
  Node nd;
  nd.op = kSub;
  nd.a = a;
  nd.b = b;
  nd.val = val(a) - val(b);
  return push(std::move(nd));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(),
          "mul: shape mismatch");
  Node nd;
  nd.op = kMul;
  nd.a = a;
  nd.b = b;
  nd.val = val(a).cwiseProduct(val(b));
  return push(std::move(nd));
}

namespace {

// broadcast modes for b against a
enum BcMode : int { kBcScalar = 0, kBcRow = 1, kBcCol = 2 };

int broadcast_mode(const Mat& a, const Mat& b) {
  if (b.rows() == 1 && b.cols() == 1) return kBcScalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return kBcRow;
  if (b.cols() == 1 && b.rows() == a.rows()) return kBcCol;
  throw std::invalid_argument("broadcast: incompatible shapes");
}

}  // namespace

NodeId Graph::add_broadcast(NodeId a, NodeId b) {
  Node nd;
  nd.op = kAddBroadcast;
  nd.a = a;
  nd.b = b;
  nd.i0 = broadcast_mode(val(a), val(b));
  switch (nd.i0) {
    case kBcScalar:
      nd.val = val(a).array() + val(b)(0, 0);
      break;
    case kBcRow:
      nd.val = val(a).rowwise() + val(b).row(0);
      break;
    case kBcCol:
      nd.val = val(a).colwise() + val(b).col(0);
      break;
  }
  return push(std::move(nd));
}

NodeId Graph::mul_broadcast(NodeId a, NodeId b) {
  Node nd;
  nd.op = kMulBroadcast;
  nd.a = a;
  nd.b = b;
  nd.i0 = broadcast_mode(val(a), val(b));
  switch (nd.i0) {
    case kBcScalar:
      nd.val = val(a) * val(b)(0, 0);
      break;
    case kBcRow:
      nd.val = val(a).array().rowwise() * val(b).row(0).array();
      break;
    case kBcCol:
      nd.val = val(a).array().colwise() * val(b).col(0).array();
      break;
  }
  return push(std::move(nd));
}

NodeId Graph::scale(NodeId a, double s) {
  Node nd;
  nd.op = kScale;
  nd.a = a;
  nd.s0 = s;
  nd.val = val(a) * s;
  return push(std::move(nd));
}

NodeId Graph::add_scalar(NodeId a, double s) {
  Node nd;
  nd.op = kAddScalar;
  nd.a = a;
  nd.s0 = s;
  nd.val = val(a).array() + s;
  return push(std::move(nd));
}

NodeId Graph::relu(NodeId a) {
  Node nd;
  nd.op = kRelu;
  nd.a = a;
  nd.val = val(a).cwiseMax(0.0);
  return push(std::move(nd));
}

NodeId Graph::exp(NodeId a) {
  Node nd;
  nd.op = kExp;
  nd.a = a;
  nd.val = val(a).array().exp();
  return push(std::move(nd));
}

NodeId Graph::log(NodeId a) {
  Node nd;
  nd.op = kLog;
  nd.a = a;
  nd.val = val(a).array().log();
  return push(std::move(nd));
}

NodeId Graph::square(NodeId a) {
  Node nd;
  nd.op = kSquare;
  nd.a = a;
  nd.val = val(a).array().square();
  return push(std::move(nd));
}

NodeId Graph::pow_scalar(NodeId a, double p) {
  Node nd;
  nd.op = kPowScalar;
  nd.a = a;
  nd.s0 = p;
  nd.val = val(a).array().pow(p);
  return push(std::move(nd));
}

NodeId Graph::min(NodeId a, NodeId b) {
  require(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(),
          "min: shape mismatch");
  Node nd;
  nd.op = kMin;
  nd.a = a;
  nd.b = b;
  nd.val = val(a).cwiseMin(val(b));
  return push(std::move(nd));
}

NodeId Graph::clip(NodeId a, double lo, double hi) {
  Node nd;
  nd.op = kClip;
  nd.a = a;
  nd.s0 = lo;
  nd.s1 = hi;
  nd.val = val(a).cwiseMax(lo).cwiseMin(hi);
  return push(std::move(nd));
}

NodeId Graph::cross3(NodeId a, NodeId b) {
  require(val(a).rows() == 1 && val(a).cols() == 3 && val(b).rows() == 1 &&
              val(b).cols() == 3,
          "cross3: expects 1x3 rows");
  Node nd;
  nd.op = kCross3;
  nd.a = a;
  nd.b = b;
  const Eigen::Vector3d u = val(a).row(0);
  const Eigen::Vector3d v = val(b).row(0);
  nd.val = u.cross(v).transpose();
  return push(std::move(nd));
}

NodeId Graph::segmented_max(NodeId a, std::vector<int> bounds) {
  require(bounds.size() >= 2, "segmented_max: need at least one segment");
  require(bounds.front() == 0 && bounds.back() == val(a).rows(),
          "segmented_max: bounds must cover all rows");
  const int segs = static_cast<int>(bounds.size()) - 1;
  const int cols = static_cast<int>(val(a).cols());
  Node nd;
  nd.op = kSegmentedMax;
  nd.a = a;
  nd.bounds = std::move(bounds);
  nd.val.resize(segs, cols);
  nd.arg.resize(segs, cols);
  const Mat& x = val(a);
  for (int s = 0; s < segs; ++s) {
    const int r0 = nd.bounds[s], r1 = nd.bounds[s + 1];
    require(r1 > r0, "segmented_max: empty segment");
    for (int c = 0; c < cols; ++c) {
      int best = r0;
      double bv = x(r0, c);
      for (int r = r0 + 1; r < r1; ++r) {
        if (x(r, c) > bv) {
          bv = x(r, c);
          best = r;
        }
      }
      nd.val(s, c) = bv;
      nd.arg(s, c) = best;
    }
  }
  return push(std::move(nd));
}

NodeId Graph::softmax_rows(NodeId a) {
  Node nd;
  nd.op = kSoftmaxRows;
  nd.a = a;
  const Mat& x = val(a);
  nd.val.resize(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    Eigen::ArrayXd e = (x.row(r).array() - mx).exp();
    nd.val.row(r) = (e / e.sum()).matrix();
  }
  return push(std::move(nd));
}

NodeId Graph::softmax_expert_blocks(NodeId a, int n_experts, int m) {
  require(val(a).cols() == static_cast<Eigen::Index>(n_experts) * m,
          "softmax_expert_blocks: cols != n*m");
  Node nd;
  nd.op = kSoftmaxExpertBlocks;
  nd.a = a;
  nd.i0 = n_experts;
  nd.i1 = m;
  const Mat& x = val(a);
  nd.val.resize(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (int j = 0; j < m; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int f = 0; f < n_experts; ++f) mx = std::max(mx, x(r, f * m + j));
      double z = 0.0;
      for (int f = 0; f < n_experts; ++f) z += std::exp(x(r, f * m + j) - mx);
      for (int f = 0; f < n_experts; ++f) {
        nd.val(r, f * m + j) = std::exp(x(r, f * m + j) - mx) / z;
      }
    }
  }
  return push(std::move(nd));
}

NodeId Graph::layer_norm(NodeId x, NodeId gain, NodeId bias, double eps) {
  const Mat& xv = val(x);
  require(val(gain).rows() == 1 && val(gain).cols() == xv.cols(),
          "layer_norm: gain shape");
  require(val(bias).rows() == 1 && val(bias).cols() == xv.cols(),
          "layer_norm: bias shape");
  Node nd;
  nd.op = kLayerNorm;
  nd.a = x;
  nd.b = gain;
  nd.c = bias;
  nd.s0 = eps;
  nd.aux.resize(xv.rows(), xv.cols());
  nd.auxv.resize(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + eps);
    nd.auxv(r) = inv;
    nd.aux.row(r) = ((xv.row(r).array() - mu) * inv).matrix();
  }
  nd.val = (nd.aux.array().rowwise() * val(gain).row(0).array()).matrix()
               .rowwise() +
           val(bias).row(0);
  return push(std::move(nd));
}

NodeId Graph::concat_cols(const std::vector<NodeId>& parts) {
  require(!parts.empty(), "concat_cols: empty");
  const Eigen::Index rows = val(parts[0]).rows();
  Eigen::Index cols = 0;
  for (NodeId p : parts) {
    require(val(p).rows() == rows, "concat_cols: row mismatch");
    cols += val(p).cols();
  }
  Node nd;
  nd.op = kConcatCols;
  nd.list = parts;
  nd.val.resize(rows, cols);
  Eigen::Index c = 0;
  for (NodeId p : parts) {
    nd.val.middleCols(c, val(p).cols()) = val(p);
    c += val(p).cols();
  }
  return push(std::move(nd));
}

NodeId Graph::concat_rows(const std::vector<NodeId>& parts) {
  require(!parts.empty(), "concat_rows: empty");
  const Eigen::Index cols = val(parts[0]).cols();
  Eigen::Index rows = 0;
  for (NodeId p : parts) {
    require(val(p).cols() == cols, "concat_rows: col mismatch");
    rows += val(p).rows();
  }
  Node nd;
  nd.op = kConcatRows;
  nd.list = parts;
  nd.val.resize(rows, cols);
  Eigen::Index r = 0;
  for (NodeId p : parts) {
    nd.val.middleRows(r, val(p).rows()) = val(p);
    r += val(p).rows();
  }
  return push(std::move(nd));
}

NodeId Graph::slice_cols(NodeId a, int c0, int len) {
  require(c0 >= 0 && len > 0 && c0 + len <= val(a).cols(),
          "slice_cols: out of range");
  Node nd;
  nd.op = kSliceCols;
  nd.a = a;
  nd.i0 = c0;
  nd.i1 = len;
  nd.val = val(a).middleCols(c0, len);
  return push(std::move(nd));
}

NodeId Graph::slice_rows(NodeId a, int r0, int len) {
  require(r0 >= 0 && len > 0 && r0 + len <= val(a).rows(),
          "slice_rows: out of range");
  Node nd;
  nd.op = kSliceRows;
  nd.a = a;
  nd.i0 = r0;
  nd.i1 = len;
  nd.val = val(a).middleRows(r0, len);
  return push(std::move(nd));
}

NodeId Graph::sum(NodeId a) {
  Node nd;
  nd.op = kSum;
  nd.a = a;
  nd.val = Mat::Constant(1, 1, val(a).sum());
  return push(std::move(nd));
}

NodeId Graph::mean(NodeId a) {
  Node nd;
  nd.op = kMean;
  nd.a = a;
  nd.val = Mat::Constant(1, 1, val(a).mean());
  return push(std::move(nd));
}

NodeId Graph::rowwise_sum(NodeId a) {
  Node nd;
  nd.op = kRowwiseSum;
  nd.a = a;
  nd.val = val(a).rowwise().sum();
  return push(std::move(nd));
}

void Graph::backward(NodeId out) {
  require(grads_ != nullptr, "backward: graph has no GradBuffer");
  require(val(out).size() == 1, "backward: output must be scalar");
  // zero local node grads (lazy-allocated; stale ones must be reset)
  for (auto& nd : nodes_) {
    if (nd.grad.size() > 0) nd.grad.setZero();
  }
  grad_of(out)(0, 0) = 1.0;

  for (int id = out; id >= 0; --id) {
    Node& nd = nodes_[id];
    if (nd.grad.size() == 0) continue;  // not on any path to out
    const Mat& g = nd.grad;
    if (g.size() == 0) continue;
    switch (nd.op) {
      case kInput:
        break;
      case kParam:
        grads_->at(nd.i0) += g;
        break;
      case kMatMul:
        grad_of(nd.a).noalias() += g * val(nd.b).transpose();
        grad_of(nd.b).noalias() += val(nd.a).transpose() * g;
        break;
      case kMatMulT:
        grad_of(nd.a).noalias() += g * val(nd.b);
        grad_of(nd.b).noalias() += g.transpose() * val(nd.a);
        break;
      case kLinearPointwise:
        grad_of(nd.a).noalias() += g * val(nd.b).transpose();
        grad_of(nd.b).noalias() += val(nd.a).transpose() * g;
        grad_of(nd.c) += g.colwise().sum();
        break;
      case kAdd:
        grad_of(nd.a) += g;
        grad_of(nd.b) += g;
        break;
      case kSub:
        grad_of(nd.a) += g;
        grad_of(nd.b) -= g;
        break;
      case kMul:
        grad_of(nd.a) += g.cwiseProduct(val(nd.b));
        grad_of(nd.b) += g.cwiseProduct(val(nd.a));
        break;
      case kAddBroadcast:
        grad_of(nd.a) += g;
        switch (nd.i0) {
          case kBcScalar:
            grad_of(nd.b)(0, 0) += g.sum();
            break;
          case kBcRow:
            grad_of(nd.b) += g.colwise().sum();
            break;
          case kBcCol:
            grad_of(nd.b) += g.rowwise().sum();
            break;
        }
        break;
      case kMulBroadcast:
        switch (nd.i0) {
          case kBcScalar:
            grad_of(nd.a) += g * val(nd.b)(0, 0);
            grad_of(nd.b)(0, 0) += g.cwiseProduct(val(nd.a)).sum();
            break;
          case kBcRow:
            grad_of(nd.a) +=
                (g.array().rowwise() * val(nd.b).row(0).array()).matrix();
            grad_of(nd.b) += g.cwiseProduct(val(nd.a)).colwise().sum();
            break;
          case kBcCol:
            grad_of(nd.a) +=
                (g.array().colwise() * val(nd.b).col(0).array()).matrix();
            grad_of(nd.b) += g.cwiseProduct(val(nd.a)).rowwise().sum();
            break;
        }
        break;
      case kScale:
        grad_of(nd.a) += g * nd.s0;
        break;
      case kAddScalar:
        grad_of(nd.a) += g;
        break;
      case kRelu:
        grad_of(nd.a) +=
            (val(nd.a).array() > 0.0).cast<double>().matrix().cwiseProduct(g);
        break;
      case kExp:
        grad_of(nd.a) += g.cwiseProduct(nd.val);
        break;
      case kLog:
        grad_of(nd.a) += g.cwiseQuotient(val(nd.a));
        break;
      case kSquare:
        grad_of(nd.a) += 2.0 * g.cwiseProduct(val(nd.a));
        break;
      case kPowScalar:
        grad_of(nd.a) +=
            (g.array() * nd.s0 * val(nd.a).array().pow(nd.s0 - 1.0)).matrix();
        break;
      case kMin: {
        const Mat pick_a =
            (val(nd.a).array() <= val(nd.b).array()).cast<double>();
        grad_of(nd.a) += g.cwiseProduct(pick_a);
        grad_of(nd.b) += g.cwiseProduct((1.0 - pick_a.array()).matrix());
        break;
      }
      case kClip: {
        const Mat inside = ((val(nd.a).array() >= nd.s0) &&
                            (val(nd.a).array() <= nd.s1))
                               .cast<double>();
        grad_of(nd.a) += g.cwiseProduct(inside);
        break;
      }
      case kCross3: {
        const Eigen::Vector3d u = val(nd.a).row(0);
        const Eigen::Vector3d v = val(nd.b).row(0);
        const Eigen::Vector3d gy = g.row(0);
        grad_of(nd.a) += v.cross(gy).transpose();
        grad_of(nd.b) += gy.cross(u).transpose();
        break;
      }
      case kSegmentedMax: {
        Mat& ga = grad_of(nd.a);
        for (Eigen::Index s = 0; s < nd.val.rows(); ++s) {
          for (Eigen::Index c = 0; c < nd.val.cols(); ++c) {
            ga(nd.arg(s, c), c) += g(s, c);
          }
        }
        break;
      }
      case kSoftmaxRows: {
        Mat& ga = grad_of(nd.a);
        for (Eigen::Index r = 0; r < nd.val.rows(); ++r) {
          const double dot = g.row(r).dot(nd.val.row(r));
          ga.row(r) +=
              ((g.row(r).array() - dot) * nd.val.row(r).array()).matrix();
        }
        break;
      }
      case kSoftmaxExpertBlocks: {
        Mat& ga = grad_of(nd.a);
        const int n = nd.i0, m = nd.i1;
        for (Eigen::Index r = 0; r < nd.val.rows(); ++r) {
          for (int j = 0; j < m; ++j) {
            double dot = 0.0;
            for (int f = 0; f < n; ++f) {
              dot += g(r, f * m + j) * nd.val(r, f * m + j);
            }
            for (int f = 0; f < n; ++f) {
              ga(r, f * m + j) +=
                  (g(r, f * m + j) - dot) * nd.val(r, f * m + j);
            }
          }
        }
        break;
      }
      case kLayerNorm: {
        const Mat& gain = val(nd.b);
        Mat& gx = grad_of(nd.a);
        Mat& gg = grad_of(nd.b);
        Mat& gb = grad_of(nd.c);
        const Eigen::Index cols = nd.val.cols();
        for (Eigen::Index r = 0; r < nd.val.rows(); ++r) {
          const Eigen::ArrayXd dy = g.row(r).array() * gain.row(0).array();
          const Eigen::ArrayXd xhat = nd.aux.row(r).array();
          const double m1 = dy.mean();
          const double m2 = (dy * xhat).mean();
          gx.row(r) += ((dy - m1 - xhat * m2) * nd.auxv(r)).matrix();
          gg.row(0) += (g.row(r).array() * xhat.transpose()).matrix();
          gb.row(0) += g.row(r);
          (void)cols;
        }
        break;
      }
      case kConcatCols: {
        Eigen::Index c = 0;
        for (NodeId p : nd.list) {
          grad_of(p) += g.middleCols(c, val(p).cols());
          c += val(p).cols();
        }
        break;
      }
      case kConcatRows: {
        Eigen::Index r = 0;
        for (NodeId p : nd.list) {
          grad_of(p) += g.middleRows(r, val(p).rows());
          r += val(p).rows();
        }
        break;
      }
      case kSliceCols:
        grad_of(nd.a).middleCols(nd.i0, nd.i1) += g;
        break;
      case kSliceRows:
        grad_of(nd.a).middleRows(nd.i0, nd.i1) += g;
        break;
      case kSum:
        grad_of(nd.a).array() += g(0, 0);
        break;
      case kMean:
        grad_of(nd.a).array() += g(0, 0) / static_cast<double>(val(nd.a).size());
        break;
      case kRowwiseSum:
        grad_of(nd.a).colwise() += g.col(0);
        break;
      default:
        throw std::logic_error("backward: unknown op");
    }
  }
}

double kaiming_bound(int fan_in) { return std::sqrt(6.0 / fan_in); }

}  // namespace fm::nn
