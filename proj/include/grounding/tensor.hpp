#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace grounding {

using Array = Eigen::ArrayXd;

std::string shape_string(std::span<const int> shape);

class Tape;

/// Dense row-major tensor of doubles. When `tape` is set the tensor is a
/// handle into that tape's graph and operations consuming it are recorded.
struct Tensor {
  std::vector<int> shape;
  Array data;
  Tape* tape = nullptr;
  int node = -1;

  Tensor() = default;
  Tensor(std::vector<int> shape_, Array data_);

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);
  static Tensor scalar(double value);
  static Tensor from(std::vector<int> shape, std::vector<double> values);

  int rank() const { return static_cast<int>(shape.size()); }
  Eigen::Index size() const { return data.size(); }
  bool tracked() const { return tape != nullptr && node >= 0; }

  /// Value of a single-element tensor.
  double item() const;

  double operator()(int i) const { return data[i]; }
  double& operator()(int i) { return data[i]; }
  double operator()(int i, int j) const;
  double& operator()(int i, int j);
  double operator()(int i, int j, int k) const;
  double& operator()(int i, int j, int k);

  /// Same data, detached from any tape.
  Tensor detached() const;
};

bool same_shape(const Tensor& a, const Tensor& b);
Eigen::Index shape_numel(std::span<const int> shape);

enum class Primitive {
  Add,
  Sub,
  Mul,
  ScalarMul,
  MatMul,
  Conv2d,
  GlobalAvgPool,
  MaxList,
  Log,
  Logistic,
  Tanh,
  Dot,
  Sum,
  SquaredNorm,
  Concat,
  RowScaleShift,
  BatchStandardize,
  FlattenSpatial,
  Reshape,
  SliceRows,
};

const char* primitive_name(Primitive kind);

struct OpAttrs {
  double scalar = 1.0;      // ScalarMul
  int stride = 1;           // Conv2d
  int pad = 0;              // Conv2d
  double eps = 1e-5;        // BatchStandardize
  int begin = 0;            // SliceRows
  int count = 0;            // SliceRows
  std::vector<int> shape;   // Reshape
};

struct TapeNode {
  bool leaf = false;
  Primitive kind = Primitive::Add;
  std::vector<int> inputs;       // node ids, -1 for untracked inputs
  std::vector<Tensor> saved;     // input values at record time
  Tensor out_value;
  std::vector<Tensor> aux;       // extra per-op values (BatchStandardize: invstd)
  std::vector<int> out_shape;
  OpAttrs attrs;
};

/// Reverse-mode tape, rebuilt per forward pass. Confined to one thread
/// together with the tensors that reference it.
class Tape {
 public:
  /// Registers `value` as a differentiable leaf and returns the tracked handle.
  Tensor variable(const Tensor& value);

  /// Gradients of a single-element output w.r.t. every node on the tape.
  /// Entry i has the shape of node i; nodes the output does not depend on
  /// get zeros.
  std::vector<Tensor> backward(const Tensor& output) const;

  std::size_t size() const { return nodes_.size(); }
  const TapeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  int record(TapeNode node);

 private:
  std::vector<TapeNode> nodes_;
};

/// Applies one primitive. If any input is tracked, the application is
/// recorded on that input's tape; all tracked inputs must share one tape.
Tensor apply_primitive(Primitive kind, std::span<const Tensor> inputs, const OpAttrs& attrs = {});

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(double c, const Tensor& a);
// [m,k]x[k,n] -> [m,n];  [m,k]x[k] -> [m];  [k]x[k,n] -> [n]
Tensor matmul(const Tensor& a, const Tensor& b);
// input [Cin,H,W], kernel [Cout,Cin,kh,kw], bias [Cout]; zero padding
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int pad);
// [C,H,W] -> [C]
Tensor global_avg_pool(const Tensor& input);
// coordinatewise max over same-shape tensors; gradient goes to the
// lowest-index input attaining the max
Tensor max_elementwise(std::span<const Tensor> inputs);
Tensor log(const Tensor& a);        // rejects nonpositive entries
Tensor logistic(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);
Tensor sum(const Tensor& a);
Tensor squared_norm(const Tensor& a);
// concatenation along the first axis; trailing extents must match
Tensor concat_rows(std::span<const Tensor> inputs);
// out[n,e] = x[n,e]*scale[e] + shift[e]
Tensor row_scale_shift(const Tensor& x, const Tensor& scale, const Tensor& shift);
// per-feature standardization of [N,E] rows with batch statistics
Tensor batch_standardize(const Tensor& x, double eps = 1e-5);
// [C,H,W] -> [H*W, C]
Tensor flatten_spatial(const Tensor& input);
Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor slice_rows(const Tensor& a, int begin, int count);

/// Max over coordinates of the relative error between the analytic gradient
/// of f at x and a central finite difference with step eps. The relative
/// error denominator is max(|analytic|, |numeric|, 1e-8).
double finite_difference_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                               double eps);

}  // namespace grounding
