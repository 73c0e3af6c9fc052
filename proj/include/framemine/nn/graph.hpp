#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace fm::nn {

using Mat = Eigen::MatrixXd;

// Value plus optional gradient buffer of the same shape.
struct Tensor {
  Mat value;
  Mat grad;

  bool has_grad() const { return grad.size() == value.size() && grad.size() > 0; }
};

// Named f64 parameter with optimizer slots.
struct Param {
  std::string name;
  Mat value;
  Mat adam_m;
  Mat adam_v;
};

class ParamStore {
 public:
  int add(const std::string& name, Mat init);
  int index_of(const std::string& name) const;  // -1 when absent
  int size() const { return static_cast<int>(params_.size()); }
  Param& at(int i) { return params_[i]; }
  const Param& at(int i) const { return params_[i]; }
  int64_t total_scalars() const;

 private:
  std::vector<Param> params_;
};

// Per-parameter gradient accumulator, index-aligned with a ParamStore.
class GradBuffer {
 public:
  explicit GradBuffer(const ParamStore& store);
  void zero();
  Mat& at(int i) { return grads_[i]; }
  const Mat& at(int i) const { return grads_[i]; }
  int size() const { return static_cast<int>(grads_.size()); }
  void add(const GradBuffer& other);
  double global_norm() const;
  void scale(double s);

 private:
  std::vector<Mat> grads_;
};

using NodeId = int;

// Eager reverse-mode tape. Values are computed at node creation; backward()
// walks the tape in reverse and accumulates parameter gradients into the
// attached GradBuffer. Reuse one Graph per sample via clear().
class Graph {
 public:
  explicit Graph(const ParamStore* params, GradBuffer* grads = nullptr)
      : params_(params), grads_(grads) {}

  void clear();

  NodeId input(Mat v);
  NodeId param(int param_index);

  NodeId matmul(NodeId a, NodeId b);
  NodeId matmul_t(NodeId a, NodeId b);  // a * b^T
  // x*W + b with a fixed per-row accumulation order: each output row is
  // bitwise-identical regardless of where the row sits or how many rows the
  // batch holds. Used by per-point layers, where permutation/duplication
  // invariance must be exact. (GEMM kernels don't guarantee this.)
  NodeId linear_pointwise(NodeId x, NodeId w, NodeId b);
  NodeId add(NodeId a, NodeId b);      // same shape
  NodeId sub(NodeId a, NodeId b);      // same shape
  NodeId mul(NodeId a, NodeId b);      // elementwise, same shape
  // b broadcast against a: b may be 1x1, 1xC (over rows) or Rx1 (over cols)
  NodeId add_broadcast(NodeId a, NodeId b);
  NodeId mul_broadcast(NodeId a, NodeId b);
  NodeId scale(NodeId a, double s);
  NodeId add_scalar(NodeId a, double s);
  NodeId relu(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId square(NodeId a);
  NodeId pow_scalar(NodeId a, double p);
  NodeId min(NodeId a, NodeId b);
  NodeId clip(NodeId a, double lo, double hi);
  NodeId cross3(NodeId a, NodeId b);  // 1x3 row vectors

  // Max over each row segment [bounds[s], bounds[s+1]); one output row per
  // segment. Backward routes to the first attaining row (deterministic).
  NodeId segmented_max(NodeId a, std::vector<int> bounds);
  NodeId softmax_rows(NodeId a);
  // a is B x (n*m) holding n frame-major blocks of width m; softmax across
  // the n block entries for every (row, j).
  NodeId softmax_expert_blocks(NodeId a, int n_experts, int m);
  NodeId layer_norm(NodeId x, NodeId gain, NodeId bias, double eps = 1e-5);

  NodeId concat_cols(const std::vector<NodeId>& parts);
  NodeId concat_rows(const std::vector<NodeId>& parts);
  NodeId slice_cols(NodeId a, int c0, int len);
  NodeId slice_rows(NodeId a, int r0, int len);

  NodeId sum(NodeId a);          // 1x1
  NodeId mean(NodeId a);         // 1x1
  NodeId rowwise_sum(NodeId a);  // Bx1

  const Mat& value(NodeId n) const;
  double scalar(NodeId n) const;

  // Seeds d(node)/d(node) = 1 (node must be 1x1) and accumulates parameter
  // gradients. Requires a GradBuffer.
  void backward(NodeId node);

 private:
  struct Node {
    int op;
    int a = -1, b = -1, c = -1;
    std::vector<int> list;  // concat inputs
    Mat val;
    Mat grad;
    const Mat* ext = nullptr;  // param leaves alias the store
    double s0 = 0.0, s1 = 0.0;
    int i0 = 0, i1 = 0;
    std::vector<int> bounds;
    Eigen::MatrixXi arg;  // segmented_max argmax rows
    Mat aux;              // layer_norm xhat
    Eigen::VectorXd auxv; // layer_norm inv-std
  };

  Node& node(NodeId n) { return nodes_[n]; }
  const Mat& val(NodeId n) const {
    const Node& nd = nodes_[n];
    return nd.ext ? *nd.ext : nd.val;
  }
  Mat& grad_of(NodeId n);
  NodeId push(Node nd);

  const ParamStore* params_;
  GradBuffer* grads_;
  std::vector<Node> nodes_;
};

// Kaiming-uniform fan-in init bound.
double kaiming_bound(int fan_in);

}  // namespace fm::nn
