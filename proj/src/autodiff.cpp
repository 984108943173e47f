#include "minopt/autodiff.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace minopt {

namespace {

const char* op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kParam: return "param";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kMul: return "mul";
    case Op::kRelu: return "relu";
    case Op::kLeakyRelu: return "leaky_relu";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kLog: return "log";
    case Op::kExp: return "exp";
    case Op::kSoftplus: return "softplus";
    case Op::kSoftmax: return "softmax";
    case Op::kMean: return "mean";
    case Op::kSum: return "sum";
    case Op::kConcat: return "concat";
    case Op::kReshape: return "reshape";
    case Op::kAffine: return "affine";
  }
  return "?";
}

// Broadcast contract for add/mul: identical shapes, or one operand is the
// rank-1 (or [1,n]) row vector matching the other's last extent.
enum class Bcast { kNone, kBRow, kARow };

Bcast classify_broadcast(const Tensor& a, const Tensor& b, const char* what) {
  if (a.same_shape(b)) return Bcast::kNone;
  auto is_row_of = [](const Tensor& big, const Tensor& small) {
    if (big.cols() != small.size()) return false;
    return small.rank() == 1 || (small.rank() == 2 && small.extent(0) == 1);
  };
  if (a.rank() == 2 && is_row_of(a, b)) return Bcast::kBRow;
  if (b.rank() == 2 && is_row_of(b, a)) return Bcast::kARow;
  throw ShapeError(std::string(what) + ": incompatible shapes " +
                   shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

double softplus_stable(double x) {
  // log(1 + e^x) without overflow for large |x|.
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

void matmul_accumulate(const double* a, const double* b, double* out,
                       std::size_t m, std::size_t k, std::size_t n) {
  // ikj order: unit-stride inner loop, vectorizes well.
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* orow = out + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

NodeId Graph::push(Node n) {
  if (nodes_.size() >= UINT32_MAX) throw std::length_error("graph too large");
  n.value.require_finite(op_name(n.op));
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeId Graph::input(Tensor value) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::param(Tensor value) {
  Node n;
  n.op = Op::kParam;
  n.needs_grad = true;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::unary(Op op, NodeId a, Tensor value, double c0, double c1) {
  Node n;
  n.op = op;
  n.parent = {a.v, 0};
  n.n_parents = 1;
  n.needs_grad = nodes_[a.v].needs_grad;
  n.c0 = c0;
  n.c1 = c1;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::binary(Op op, NodeId a, NodeId b, Tensor value) {
  Node n;
  n.op = op;
  n.parent = {a.v, b.v};
  n.n_parents = 2;
  n.needs_grad = nodes_[a.v].needs_grad || nodes_[b.v].needs_grad;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a.v].value;
  const Tensor& tb = nodes_[b.v].value;
  if (ta.rank() != 2 || tb.rank() != 2 || ta.extent(1) != tb.extent(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(ta.shape()) +
                     " vs " + shape_str(tb.shape()));
  const std::size_t m = ta.extent(0), k = ta.extent(1), n = tb.extent(1);
  Tensor out(Shape{m, n});
  matmul_accumulate(ta.data(), tb.data(), out.data(), m, k, n);
  return binary(Op::kMatMul, a, b, std::move(out));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a.v].value;
  const Tensor& tb = nodes_[b.v].value;
  const Bcast bc = classify_broadcast(ta, tb, "add");
  const Tensor& big = bc == Bcast::kARow ? tb : ta;
  const Tensor& row = bc == Bcast::kARow ? ta : tb;
  Tensor out(big.shape());
  if (bc == Bcast::kNone) {
    for (std::size_t i = 0; i < big.size(); ++i)
      out[i] = ta[i] + tb[i];
  } else {
    const std::size_t c = big.cols();
    for (std::size_t i = 0; i < big.size(); ++i)
      out[i] = big[i] + row[i % c];
  }
  return binary(Op::kAdd, a, b, std::move(out));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a.v].value;
  const Tensor& tb = nodes_[b.v].value;
  const Bcast bc = classify_broadcast(ta, tb, "mul");
  const Tensor& big = bc == Bcast::kARow ? tb : ta;
  const Tensor& row = bc == Bcast::kARow ? ta : tb;
  Tensor out(big.shape());
  if (bc == Bcast::kNone) {
    for (std::size_t i = 0; i < big.size(); ++i)
      out[i] = ta[i] * tb[i];
  } else {
    const std::size_t c = big.cols();
    for (std::size_t i = 0; i < big.size(); ++i)
      out[i] = big[i] * row[i % c];
  }
  return binary(Op::kMul, a, b, std::move(out));
}

NodeId Graph::relu(NodeId a) {
  const Tensor& t = nodes_[a.v].value;
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i] > 0 ? t[i] : 0.0;
  return unary(Op::kRelu, a, std::move(out));
}

NodeId Graph::leaky_relu(NodeId a, double slope) {
  const Tensor& t = nodes_[a.v].value;
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i)
    out[i] = t[i] > 0 ? t[i] : slope * t[i];
  return unary(Op::kLeakyRelu, a, std::move(out), slope);
}

NodeId Graph::tanh(NodeId a) {
  const Tensor& t = nodes_[a.v].value;
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::tanh(t[i]);
  return unary(Op::kTanh, a, std::move(out));
}

NodeId Graph::sigmoid(NodeId a) {
  const Tensor& t = nodes_[a.v].value;
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i)
    out[i] = t[i] >= 0 ? 1.0 / (1.0 + std::exp(-t[i]))
                       : std::exp(t[i]) / (1.0 + std::exp(t[i]));
  return unary(Op::kSigmoid, a, std::move(out));
}

NodeId Graph::log(NodeId a) {
  const Tensor& t = nodes_[a.v].value;
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::log(t[i]);
  return unary(Op::kLog, a, std::move(out));
}

NodeId Graph::exp(NodeId a) {
  const Tensor& t = nodes_[a.v].value;
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::exp(t[i]);
  return unary(Op::kExp, a, std::move(out));
}

NodeId Graph::softplus(NodeId a) {
  const Tensor& t = nodes_[a.v].value;
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = softplus_stable(t[i]);
  return unary(Op::kSoftplus, a, std::move(out));
}

NodeId Graph::softmax(NodeId a) {
  const Tensor& t = nodes_[a.v].value;
  if (t.rank() == 0 || t.cols() == 0) throw ShapeError("softmax: empty tensor");
  Tensor out(t.shape());
  const std::size_t rows = t.rows(), cols = t.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = t.data() + r * cols;
    double* o = out.data() + r * cols;
    double mx = in[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
    double z = 0;
    for (std::size_t c = 0; c < cols; ++c) z += (o[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) o[c] /= z;
  }
  return unary(Op::kSoftmax, a, std::move(out));
}

NodeId Graph::mean(NodeId a) {
  const Tensor& t = nodes_[a.v].value;
  if (t.size() == 0) throw ShapeError("mean: empty tensor");
  double s = 0;
  for (std::size_t i = 0; i < t.size(); ++i) s += t[i];
  return unary(Op::kMean, a, Tensor::scalar(s / double(t.size())));
}

NodeId Graph::sum(NodeId a) {
  const Tensor& t = nodes_[a.v].value;
  double s = 0;
  for (std::size_t i = 0; i < t.size(); ++i) s += t[i];
  return unary(Op::kSum, a, Tensor::scalar(s));
}

NodeId Graph::concat(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a.v].value;
  const Tensor& tb = nodes_[b.v].value;
  if (ta.rank() != tb.rank() || ta.rank() == 0 || ta.rank() > 2 ||
      (ta.rank() == 2 && ta.extent(0) != tb.extent(0)))
    throw ShapeError("concat: incompatible shapes " + shape_str(ta.shape()) +
                     " vs " + shape_str(tb.shape()));
  Shape shape = ta.shape();
  shape.back() += tb.cols();
  Tensor out(std::move(shape));
  const std::size_t rows = ta.rows(), ca = ta.cols(), cb = tb.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    std::memcpy(out.data() + r * (ca + cb), ta.data() + r * ca,
                ca * sizeof(double));
    std::memcpy(out.data() + r * (ca + cb) + ca, tb.data() + r * cb,
                cb * sizeof(double));
  }
  return binary(Op::kConcat, a, b, std::move(out));
}

NodeId Graph::reshape(NodeId a, Shape shape) {
  const Tensor& t = nodes_[a.v].value;
  if (Tensor::count(shape) != t.size())
    throw ShapeError("reshape: element count mismatch");
  Tensor out(std::move(shape),
             std::vector<double>(t.data(), t.data() + t.size()));
  return unary(Op::kReshape, a, std::move(out));
}

NodeId Graph::affine(NodeId a, double scale, double shift) {
  const Tensor& t = nodes_[a.v].value;
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = scale * t[i] + shift;
  return unary(Op::kAffine, a, std::move(out), scale, shift);
}

Tensor& Graph::grad_buf(std::uint32_t idx) {
  Node& n = nodes_[idx];
  if (n.grad.shape().empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

const Tensor& Graph::grad(NodeId n) const {
  if (!has_grad(n))
    throw std::logic_error("gradient not computed for this node");
  return nodes_[n.v].grad;
}

void Graph::backward(NodeId output) {
  if (nodes_[output.v].value.size() != 1)
    throw ShapeError("backward: output must be scalar");
  for (Node& n : nodes_) n.grad = Tensor();
  grad_buf(output.v)[0] = 1.0;
  // Reverse creation order == reverse topological order; each node visited
  // exactly once.
  for (std::uint32_t i = output.v + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.shape().empty()) continue;
    if (n.n_parents > 0) backward_into(n, n.grad);
  }
}

void Graph::backward_into(const Node& n, const Tensor& g) {
  auto needs = [&](std::uint32_t p) { return nodes_[p].needs_grad; };
  const Tensor& out = n.value;

  switch (n.op) {
    case Op::kMatMul: {
      const Tensor& a = nodes_[n.parent[0]].value;
      const Tensor& b = nodes_[n.parent[1]].value;
      const std::size_t m = a.extent(0), k = a.extent(1), nn = b.extent(1);
      if (needs(n.parent[0])) {
        // dA = G @ B^T
        Tensor& da = grad_buf(n.parent[0]);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < nn; ++j) {
            const double gv = g.at(i, j);
            if (gv == 0.0) continue;
            const double* brow = b.data() + j;  // column j, stride nn
            double* darow = da.data() + i * k;
            for (std::size_t kk = 0; kk < k; ++kk)
              darow[kk] += gv * brow[kk * nn];
          }
      }
      if (needs(n.parent[1])) {
        // dB = A^T @ G
        Tensor& db = grad_buf(n.parent[1]);
        for (std::size_t i = 0; i < m; ++i) {
          const double* arow = a.data() + i * k;
          const double* grow = g.data() + i * nn;
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            if (av == 0.0) continue;
            double* dbrow = db.data() + kk * nn;
            for (std::size_t j = 0; j < nn; ++j) dbrow[j] += av * grow[j];
          }
        }
      }
      break;
    }
    case Op::kAdd:
    case Op::kMul: {
      const Tensor& a = nodes_[n.parent[0]].value;
      const Tensor& b = nodes_[n.parent[1]].value;
      const Bcast bc = classify_broadcast(a, b, "add/mul backward");
      for (int side = 0; side < 2; ++side) {
        const std::uint32_t pid = n.parent[side];
        if (!needs(pid)) continue;
        const Tensor& other = side == 0 ? b : a;
        const bool self_is_row =
            (bc == Bcast::kARow && side == 0) || (bc == Bcast::kBRow && side == 1);
        const bool other_is_row = bc != Bcast::kNone && !self_is_row;
        Tensor& d = grad_buf(pid);
        const std::size_t c = out.cols();
        for (std::size_t i = 0; i < out.size(); ++i) {
          const double factor =
              n.op == Op::kAdd
                  ? 1.0
                  : (other_is_row ? other[i % c] : other[i]);
          if (self_is_row)
            d[i % c] += g[i] * factor;
          else
            d[i] += g[i] * factor;
        }
      }
      break;
    }
    case Op::kRelu: {
      if (!needs(n.parent[0])) break;
      const Tensor& x = nodes_[n.parent[0]].value;
      Tensor& d = grad_buf(n.parent[0]);
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0) d[i] += g[i];
      break;
    }
    case Op::kLeakyRelu: {
      if (!needs(n.parent[0])) break;
      const Tensor& x = nodes_[n.parent[0]].value;
      Tensor& d = grad_buf(n.parent[0]);
      for (std::size_t i = 0; i < x.size(); ++i)
        d[i] += g[i] * (x[i] > 0 ? 1.0 : n.c0);
      break;
    }
    case Op::kTanh: {
      if (!needs(n.parent[0])) break;
      Tensor& d = grad_buf(n.parent[0]);
      for (std::size_t i = 0; i < out.size(); ++i)
        d[i] += g[i] * (1.0 - out[i] * out[i]);
      break;
    }
    case Op::kSigmoid: {
      if (!needs(n.parent[0])) break;
      Tensor& d = grad_buf(n.parent[0]);
      for (std::size_t i = 0; i < out.size(); ++i)
        d[i] += g[i] * out[i] * (1.0 - out[i]);
      break;
    }
    case Op::kLog: {
      if (!needs(n.parent[0])) break;
      const Tensor& x = nodes_[n.parent[0]].value;
      Tensor& d = grad_buf(n.parent[0]);
      for (std::size_t i = 0; i < x.size(); ++i) d[i] += g[i] / x[i];
      break;
    }
    case Op::kExp: {
      if (!needs(n.parent[0])) break;
      Tensor& d = grad_buf(n.parent[0]);
      for (std::size_t i = 0; i < out.size(); ++i) d[i] += g[i] * out[i];
      break;
    }
    case Op::kSoftplus: {
      if (!needs(n.parent[0])) break;
      const Tensor& x = nodes_[n.parent[0]].value;
      Tensor& d = grad_buf(n.parent[0]);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = x[i] >= 0 ? 1.0 / (1.0 + std::exp(-x[i]))
                                   : std::exp(x[i]) / (1.0 + std::exp(x[i]));
        d[i] += g[i] * s;
      }
      break;
    }
    case Op::kSoftmax: {
      if (!needs(n.parent[0])) break;
      Tensor& d = grad_buf(n.parent[0]);
      const std::size_t rows = out.rows(), cols = out.cols();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* y = out.data() + r * cols;
        const double* gr = g.data() + r * cols;
        double dot = 0;
        for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * y[c];
        double* dr = d.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c)
          dr[c] += y[c] * (gr[c] - dot);
      }
      break;
    }
    case Op::kMean: {
      if (!needs(n.parent[0])) break;
      Tensor& d = grad_buf(n.parent[0]);
      const double gv = g[0] / double(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += gv;
      break;
    }
    case Op::kSum: {
      if (!needs(n.parent[0])) break;
      Tensor& d = grad_buf(n.parent[0]);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[0];
      break;
    }
    case Op::kConcat: {
      const Tensor& a = nodes_[n.parent[0]].value;
      const Tensor& b = nodes_[n.parent[1]].value;
      const std::size_t rows = a.rows(), ca = a.cols(), cb = b.cols();
      if (needs(n.parent[0])) {
        Tensor& d = grad_buf(n.parent[0]);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < ca; ++c)
            d[r * ca + c] += g[r * (ca + cb) + c];
      }
      if (needs(n.parent[1])) {
        Tensor& d = grad_buf(n.parent[1]);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cb; ++c)
            d[r * cb + c] += g[r * (ca + cb) + ca + c];
      }
      break;
    }
    case Op::kReshape: {
      if (!needs(n.parent[0])) break;
      Tensor& d = grad_buf(n.parent[0]);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
      break;
    }
    case Op::kAffine: {
      if (!needs(n.parent[0])) break;
      Tensor& d = grad_buf(n.parent[0]);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * n.c0;
      break;
    }
    case Op::kInput:
    case Op::kParam:
      break;
  }
}

Tensor gumbel_noise(const Shape& shape, Rng& rng) {
  Tensor noise(shape);
  for (std::size_t i = 0; i < noise.size(); ++i)
    noise[i] = -std::log(-std::log(rng.uniform()));
  return noise;
}

NodeId gumbel_softmax(Graph& g, NodeId logits, const Tensor& noise,
                      double temperature) {
  if (!(temperature > 0))
    throw std::invalid_argument("gumbel_softmax: temperature must be > 0");
  NodeId noisy = g.add(logits, g.input(noise));
  return g.softmax(g.affine(noisy, 1.0 / temperature, 0.0));
}

Tensor gumbel_softmax_sample(const Tensor& logits, double temperature,
                             Rng& rng) {
  if (!(temperature > 0))
    throw std::invalid_argument("gumbel_softmax: temperature must be > 0");
  logits.require_finite("gumbel_softmax logits");
  Graph g;
  NodeId l = g.input(logits);
  NodeId out = gumbel_softmax(g, l, gumbel_noise(logits.shape(), rng),
                              temperature);
  return g.value(out);
}

}  // namespace minopt
