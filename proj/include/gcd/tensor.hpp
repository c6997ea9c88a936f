#ifndef GCD_TENSOR_HPP
#define GCD_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gcd {

using Shape = std::vector<int>;

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense 64-bit float tensor that doubles as a node of a dynamic reverse-mode
/// tape. A tensor created by an op keeps strong references to its operands;
/// backward() walks that DAG once in reverse topological order.
///
/// requires_grad is set on leaves and propagates to op outputs. grad buffers
/// accumulate across backward() calls until zero_grad() is invoked.
class Tensor {
public:
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;

    std::vector<TensorPtr> parents;
    std::function<void(const Tensor& out)> backward_fn;
    const char* op = "leaf";

    static TensorPtr make(Shape shape, std::vector<double> data, bool requires_grad = false);
    static TensorPtr zeros(Shape shape, bool requires_grad = false);
    static TensorPtr full(Shape shape, double value, bool requires_grad = false);
    static TensorPtr scalar(double value, bool requires_grad = false);

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
    bool is_scalar() const { return data.size() == 1; }
    double item() const;

    void zero_grad();
    void accumulate_grad(std::span<const double> g);
};

// ---- tape ops -------------------------------------------------------------

TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
/// scale * t + shift, elementwise with scalar coefficients.
TensorPtr affine(const TensorPtr& t, double scale, double shift);
TensorPtr relu(const TensorPtr& t);
TensorPtr tanh_op(const TensorPtr& t);
TensorPtr reshape(const TensorPtr& t, Shape new_shape);
/// Scalar pick of one element; gradient flows to that element only.
TensorPtr select(const TensorPtr& t, std::int64_t flat_index);
TensorPtr sum(const TensorPtr& t);
TensorPtr sum_squares(const TensorPtr& t);

/// a[m×k] · b[k×n]. Throws DimensionError naming both shapes on mismatch.
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);

/// Cross-correlation of input[C×H×W] with kernels[F×C×kH×kW].
TensorPtr conv2d(const TensorPtr& input, const TensorPtr& kernels, int stride, int padding);

/// t[F×H×W] + bias[F] broadcast over the spatial dims.
TensorPtr bias_add_channel(const TensorPtr& t, const TensorPtr& bias);

/// 2×2/stride-2 max pooling of t[C×H×W]; H and W must be even.
TensorPtr maxpool2x2(const TensorPtr& t);

/// Numerically stabilized softmax cross entropy against a class index.
/// Backward on the logits is softmax(logits) - onehot(target).
TensorPtr softmax_cross_entropy(const TensorPtr& logits, int target);

/// Value-only stabilized softmax (no tape).
std::vector<double> softmax(std::span<const double> logits);

// ---- tape traversal -------------------------------------------------------

/// Reverse-mode sweep from a scalar root. Populates grad buffers of every
/// requires_grad ancestor; repeated calls accumulate until grads are zeroed.
void backward(const TensorPtr& root);

/// Zeroes the grad buffers of root and all its tape ancestors.
void zero_grad_graph(const TensorPtr& root);

// ---- optimizer ------------------------------------------------------------

/// Momentum SGD over param->grad: v <- momentum*v + g; p <- p - lr*v.
/// velocity is resized/zeroed on first use.
void sgd_step(const std::vector<TensorPtr>& params, double lr, double momentum,
              std::vector<std::vector<double>>& velocity);

// ---- small value helpers --------------------------------------------------

bool all_finite(std::span<const double> v);
double l2_norm(std::span<const double> v);
double linf_norm(std::span<const double> v);

} // namespace gcd

#endif
