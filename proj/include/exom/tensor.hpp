#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>
#include <vector>

#include "exom/common.hpp"

namespace exom {

// Dense row-major matrix of doubles; vectors are 1-column or 1-row matrices.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c, double fill = 0.0)
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  static Tensor row_vector(std::vector<double> data) {
    Tensor t;
    t.rows = 1;
    t.cols = static_cast<int>(data.size());
    t.v = std::move(data);
    return t;
  }

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

inline Tensor tile_rows(const Tensor& row, int n) {
  assert(row.rows == 1);
  Tensor out(n, row.cols);
  for (int r = 0; r < n; ++r) {
    std::copy(row.v.begin(), row.v.end(), out.v.begin() + static_cast<std::size_t>(r) * row.cols);
  }
  return out;
}

// A trainable tensor with its gradient accumulator.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, int rows, int cols) : name(std::move(n)), value(rows, cols), grad(rows, cols) {}

  void zero_grad() { grad.fill(0.0); }
};

// Eager reverse-mode tape. Each op computes its value on creation and records
// enough to run the pull-back; backward() walks nodes in reverse, accumulating
// into node grads and, for parameter leaves, into Param::grad.
class Tape {
 public:
  using Id = int;

  enum class Op {
    kConst,
    kParam,
    kAffine,     // x [B×in] -> x·Wᵀ + b, W [out×in], b [1×out]
    kAdd,
    kSub,
    kMul,
    kDiv,
    kNeg,
    kScale,      // * c
    kAddScalar,  // + c
    kTanh,
    kRelu,
    kSoftplus,
    kExp,
    kLog,
    kSquare,
    kMax2,       // elementwise max; ties route the gradient to the first input
    kCmulRow,    // elementwise * constant row (broadcast across rows)
    kSumAll,     // -> [1×1]
    kMeanAll,    // -> [1×1]
    kRowSum,     // -> [B×1]
    kRowMax,     // -> [B×1]
    kSelectCol,  // -> [B×1]
    kSliceCols,  // -> [B×len]
    kConcatCols,
    kSubBc1,     // a [B×K] - b [B×1]
    kAddBc1,
    kMulBc1,
    kDivBc1,
    kGatherCols, // per-row column pick by constant index vector -> [B×1]
    kSumList,    // elementwise sum over same-shape inputs, value-sorted
  };

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    std::vector<int> list;    // concat inputs
    int i0 = 0;               // column index / slice lo
    int i1 = 0;               // slice len
    double c = 0.0;
    Param* param = nullptr;   // kParam
    Param* w = nullptr;       // kAffine
    Param* bias = nullptr;    // kAffine
    Tensor aux;               // kCmulRow mask
    std::vector<int> idx;     // kGatherCols
  };

  void clear() {
    nodes_.clear();
    vals_.clear();
    grads_.clear();
  }

  std::size_t node_count() const { return nodes_.size(); }

  const Tensor& value(Id id) const { return vals_[static_cast<std::size_t>(id)]; }
  const Tensor& grad(Id id) const { return grads_[static_cast<std::size_t>(id)]; }

  Id constant(Tensor t) {
    Node n{Op::kConst};
    return push(std::move(n), std::move(t));
  }

  Id param(Param& p) {
    Node n{Op::kParam};
    n.param = &p;
    return push(std::move(n), p.value);
  }

  Id affine(Id x, Param& w, Param& b) {
    const Tensor& xv = value(x);
    const int batch = xv.rows, in = xv.cols, out = w.value.rows;
    if (w.value.cols != in || b.value.cols != out || b.value.rows != 1)
      throw ShapeMismatchError("affine shape mismatch for " + w.name);
    Tensor y(batch, out);
    for (int r = 0; r < batch; ++r) {
      const double* xr = &xv.v[static_cast<std::size_t>(r) * in];
      double* yr = &y.v[static_cast<std::size_t>(r) * out];
      for (int o = 0; o < out; ++o) {
        const double* wr = &w.value.v[static_cast<std::size_t>(o) * in];
        double acc = b.value.v[static_cast<std::size_t>(o)];
        for (int i = 0; i < in; ++i) acc += xr[i] * wr[i];
        yr[o] = acc;
      }
    }
    Node n{Op::kAffine};
    n.a = x;
    n.w = &w;
    n.bias = &b;
    return push(std::move(n), std::move(y));
  }

  Id add(Id a, Id b) { return binary(Op::kAdd, a, b); }
  Id sub(Id a, Id b) { return binary(Op::kSub, a, b); }
  Id mul(Id a, Id b) { return binary(Op::kMul, a, b); }
  Id div(Id a, Id b) { return binary(Op::kDiv, a, b); }
  Id max2(Id a, Id b) { return binary(Op::kMax2, a, b); }

  Id neg(Id a) { return unary(Op::kNeg, a); }
  Id tanh_(Id a) { return unary(Op::kTanh, a); }
  Id relu(Id a) { return unary(Op::kRelu, a); }
  Id softplus_(Id a) { return unary(Op::kSoftplus, a); }
  Id exp_(Id a) { return unary(Op::kExp, a); }
  Id log_(Id a) { return unary(Op::kLog, a); }
  Id square(Id a) { return unary(Op::kSquare, a); }

  Id scale(Id a, double c) {
    Node n{Op::kScale};
    n.a = a;
    n.c = c;
    Tensor y = value(a);
    for (double& x : y.v) x *= c;
    return push(std::move(n), std::move(y));
  }

  Id add_scalar(Id a, double c) {
    Node n{Op::kAddScalar};
    n.a = a;
    n.c = c;
    Tensor y = value(a);
    for (double& x : y.v) x += c;
    return push(std::move(n), std::move(y));
  }

  // Elementwise product with a constant row, broadcast across rows. The mask
  // path of the encoder: zeroed coordinates contribute exactly zero and get
  // exactly zero input gradient.
  Id cmul_row(Id a, Tensor mask_row) {
    const Tensor& av = value(a);
    if (mask_row.rows != 1 || mask_row.cols != av.cols)
      throw ShapeMismatchError("mask row width mismatch");
    Tensor y = av;
    for (int r = 0; r < y.rows; ++r) {
      for (int c = 0; c < y.cols; ++c) y.at(r, c) *= mask_row.at(0, c);
    }
    Node n{Op::kCmulRow};
    n.a = a;
    n.aux = std::move(mask_row);
    return push(std::move(n), std::move(y));
  }

  Id sum_all(Id a) {
    double s = 0.0;
    for (double x : value(a).v) s += x;
    Node n{Op::kSumAll};
    n.a = a;
    Tensor y(1, 1);
    y.v[0] = s;
    return push(std::move(n), std::move(y));
  }

  Id mean_all(Id a) {
    double s = 0.0;
    for (double x : value(a).v) s += x;
    Node n{Op::kMeanAll};
    n.a = a;
    Tensor y(1, 1);
    y.v[0] = s / static_cast<double>(value(a).size());
    return push(std::move(n), std::move(y));
  }

  Id row_sum(Id a) {
    const Tensor& av = value(a);
    Tensor y(av.rows, 1);
    for (int r = 0; r < av.rows; ++r) {
      double s = 0.0;
      for (int c = 0; c < av.cols; ++c) s += av.at(r, c);
      y.at(r, 0) = s;
    }
    Node n{Op::kRowSum};
    n.a = a;
    return push(std::move(n), std::move(y));
  }

  Id row_max(Id a) {
    const Tensor& av = value(a);
    Tensor y(av.rows, 1);
    for (int r = 0; r < av.rows; ++r) {
      double m = av.at(r, 0);
      for (int c = 1; c < av.cols; ++c) m = std::max(m, av.at(r, c));
      y.at(r, 0) = m;
    }
    Node n{Op::kRowMax};
    n.a = a;
    return push(std::move(n), std::move(y));
  }

  Id select_col(Id a, int col) {
    const Tensor& av = value(a);
    Tensor y(av.rows, 1);
    for (int r = 0; r < av.rows; ++r) y.at(r, 0) = av.at(r, col);
    Node n{Op::kSelectCol};
    n.a = a;
    n.i0 = col;
    return push(std::move(n), std::move(y));
  }

  Id slice_cols(Id a, int lo, int len) {
    const Tensor& av = value(a);
    if (lo < 0 || lo + len > av.cols) throw ShapeMismatchError("column slice out of range");
    Tensor y(av.rows, len);
    for (int r = 0; r < av.rows; ++r) {
      for (int c = 0; c < len; ++c) y.at(r, c) = av.at(r, lo + c);
    }
    Node n{Op::kSliceCols};
    n.a = a;
    n.i0 = lo;
    n.i1 = len;
    return push(std::move(n), std::move(y));
  }

  Id concat_cols(const std::vector<Id>& parts) {
    if (parts.empty()) throw ShapeMismatchError("concat of nothing");
    int total = 0;
    const int batch = value(parts[0]).rows;
    for (Id p : parts) {
      if (value(p).rows != batch) throw ShapeMismatchError("concat row mismatch");
      total += value(p).cols;
    }
    Tensor y(batch, total);
    int off = 0;
    for (Id p : parts) {
      const Tensor& pv = value(p);
      for (int r = 0; r < batch; ++r) {
        for (int c = 0; c < pv.cols; ++c) y.at(r, off + c) = pv.at(r, c);
      }
      off += pv.cols;
    }
    Node n{Op::kConcatCols};
    n.list = parts;
    return push(std::move(n), std::move(y));
  }

  Id sub_bc1(Id a, Id b) { return broadcast1(Op::kSubBc1, a, b); }
  Id add_bc1(Id a, Id b) { return broadcast1(Op::kAddBc1, a, b); }
  Id mul_bc1(Id a, Id b) { return broadcast1(Op::kMulBc1, a, b); }
  Id div_bc1(Id a, Id b) { return broadcast1(Op::kDivBc1, a, b); }

  // Elementwise sum over same-shape tensors, accumulated in ascending value
  // order per element, so the result is bit-identical under any permutation
  // of the inputs.
  Id sum_list(const std::vector<Id>& parts) {
    if (parts.empty()) throw ShapeMismatchError("sum of nothing");
    if (parts.size() == 1) return parts[0];
    const Tensor& first = value(parts[0]);
    for (Id p : parts) {
      if (!value(p).same_shape(first)) throw ShapeMismatchError("sum_list shape mismatch");
    }
    Tensor y(first.rows, first.cols);
    std::vector<double> buf(parts.size());
    for (std::size_t i = 0; i < y.v.size(); ++i) {
      for (std::size_t p = 0; p < parts.size(); ++p) {
        buf[p] = value(parts[p]).v[i];
      }
      std::sort(buf.begin(), buf.end());
      double acc = 0.0;
      for (double x : buf) acc += x;
      y.v[i] = acc;
    }
    Node n{Op::kSumList};
    n.list = parts;
    return push(std::move(n), std::move(y));
  }

  Id gather_cols(Id a, std::vector<int> idx) {
    const Tensor& av = value(a);
    if (static_cast<int>(idx.size()) != av.rows)
      throw ShapeMismatchError("gather index count mismatch");
    Tensor y(av.rows, 1);
    for (int r = 0; r < av.rows; ++r) y.at(r, 0) = av.at(r, idx[static_cast<std::size_t>(r)]);
    Node n{Op::kGatherCols};
    n.a = a;
    n.idx = std::move(idx);
    return push(std::move(n), std::move(y));
  }

  // Numerically stable log(softmax) across columns.
  Id log_softmax_cols(Id a) {
    Id m = row_max(a);
    Id shifted = sub_bc1(a, m);
    Id lse = log_(row_sum(exp_(shifted)));
    return sub_bc1(shifted, lse);
  }

  // Stable logsumexp across a list of same-shape tensors.
  Id log_sum_exp(const std::vector<Id>& parts) {
    Id m = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) m = max2(m, parts[i]);
    Id total = exp_(sub(parts[0], m));
    for (std::size_t i = 1; i < parts.size(); ++i) total = add(total, exp_(sub(parts[i], m)));
    return add(m, log_(total));
  }

  void backward(Id loss) {
    const Tensor& lv = value(loss);
    if (lv.rows != 1 || lv.cols != 1) throw ShapeMismatchError("loss must be scalar");
    grads_.assign(nodes_.size(), Tensor());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      grads_[i] = Tensor(vals_[i].rows, vals_[i].cols, 0.0);
    }
    grads_[static_cast<std::size_t>(loss)].v[0] = 1.0;

    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
      const Node& n = nodes_[static_cast<std::size_t>(id)];
      const Tensor& g = grads_[static_cast<std::size_t>(id)];
      const Tensor& y = vals_[static_cast<std::size_t>(id)];
      switch (n.op) {
        case Op::kConst:
          break;
        case Op::kParam:
          for (std::size_t i = 0; i < g.v.size(); ++i) n.param->grad.v[i] += g.v[i];
          break;
        case Op::kAffine: {
          const Tensor& xv = vals_[static_cast<std::size_t>(n.a)];
          Tensor& gx = grads_[static_cast<std::size_t>(n.a)];
          const int batch = xv.rows, in = xv.cols, out = n.w->value.rows;
          for (int r = 0; r < batch; ++r) {
            const double* gr = &g.v[static_cast<std::size_t>(r) * out];
            const double* xr = &xv.v[static_cast<std::size_t>(r) * in];
            double* gxr = &gx.v[static_cast<std::size_t>(r) * in];
            for (int o = 0; o < out; ++o) {
              const double go = gr[o];
              if (go == 0.0) continue;
              const double* wr = &n.w->value.v[static_cast<std::size_t>(o) * in];
              double* gw = &n.w->grad.v[static_cast<std::size_t>(o) * in];
              for (int i = 0; i < in; ++i) {
                gxr[i] += go * wr[i];
                gw[i] += go * xr[i];
              }
              n.bias->grad.v[static_cast<std::size_t>(o)] += go;
            }
          }
          break;
        }
        case Op::kAdd:
          accumulate(n.a, g, +1.0);
          accumulate(n.b, g, +1.0);
          break;
        case Op::kSub:
          accumulate(n.a, g, +1.0);
          accumulate(n.b, g, -1.0);
          break;
        case Op::kMul: {
          const Tensor& av = vals_[static_cast<std::size_t>(n.a)];
          const Tensor& bv = vals_[static_cast<std::size_t>(n.b)];
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          Tensor& gb = grads_[static_cast<std::size_t>(n.b)];
          for (std::size_t i = 0; i < g.v.size(); ++i) {
            ga.v[i] += g.v[i] * bv.v[i];
            gb.v[i] += g.v[i] * av.v[i];
          }
          break;
        }
        case Op::kDiv: {
          const Tensor& av = vals_[static_cast<std::size_t>(n.a)];
          const Tensor& bv = vals_[static_cast<std::size_t>(n.b)];
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          Tensor& gb = grads_[static_cast<std::size_t>(n.b)];
          for (std::size_t i = 0; i < g.v.size(); ++i) {
            ga.v[i] += g.v[i] / bv.v[i];
            gb.v[i] -= g.v[i] * av.v[i] / (bv.v[i] * bv.v[i]);
          }
          break;
        }
        case Op::kMax2: {
          const Tensor& av = vals_[static_cast<std::size_t>(n.a)];
          const Tensor& bv = vals_[static_cast<std::size_t>(n.b)];
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          Tensor& gb = grads_[static_cast<std::size_t>(n.b)];
          for (std::size_t i = 0; i < g.v.size(); ++i) {
            if (av.v[i] >= bv.v[i]) {
              ga.v[i] += g.v[i];
            } else {
              gb.v[i] += g.v[i];
            }
          }
          break;
        }
        case Op::kNeg:
          accumulate(n.a, g, -1.0);
          break;
        case Op::kScale:
          accumulate(n.a, g, n.c);
          break;
        case Op::kAddScalar:
          accumulate(n.a, g, 1.0);
          break;
        case Op::kTanh: {
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * (1.0 - y.v[i] * y.v[i]);
          break;
        }
        case Op::kRelu: {
          const Tensor& av = vals_[static_cast<std::size_t>(n.a)];
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          for (std::size_t i = 0; i < g.v.size(); ++i) {
            if (av.v[i] > 0.0) ga.v[i] += g.v[i];
          }
          break;
        }
        case Op::kSoftplus: {
          const Tensor& av = vals_[static_cast<std::size_t>(n.a)];
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          for (std::size_t i = 0; i < g.v.size(); ++i) {
            const double s = 1.0 / (1.0 + std::exp(-av.v[i]));
            ga.v[i] += g.v[i] * s;
          }
          break;
        }
        case Op::kExp: {
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * y.v[i];
          break;
        }
        case Op::kLog: {
          const Tensor& av = vals_[static_cast<std::size_t>(n.a)];
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] / av.v[i];
          break;
        }
        case Op::kSquare: {
          const Tensor& av = vals_[static_cast<std::size_t>(n.a)];
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * 2.0 * av.v[i];
          break;
        }
        case Op::kCmulRow: {
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          for (int r = 0; r < g.rows; ++r) {
            for (int c = 0; c < g.cols; ++c) ga.at(r, c) += g.at(r, c) * n.aux.at(0, c);
          }
          break;
        }
        case Op::kSumAll: {
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          for (double& x : ga.v) x += g.v[0];
          break;
        }
        case Op::kMeanAll: {
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          const double s = g.v[0] / static_cast<double>(ga.v.size());
          for (double& x : ga.v) x += s;
          break;
        }
        case Op::kRowSum: {
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          for (int r = 0; r < ga.rows; ++r) {
            for (int c = 0; c < ga.cols; ++c) ga.at(r, c) += g.at(r, 0);
          }
          break;
        }
        case Op::kRowMax: {
          const Tensor& av = vals_[static_cast<std::size_t>(n.a)];
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          for (int r = 0; r < av.rows; ++r) {
            int best = 0;
            for (int c = 1; c < av.cols; ++c) {
              if (av.at(r, c) > av.at(r, best)) best = c;
            }
            ga.at(r, best) += g.at(r, 0);
          }
          break;
        }
        case Op::kSelectCol: {
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          for (int r = 0; r < ga.rows; ++r) ga.at(r, n.i0) += g.at(r, 0);
          break;
        }
        case Op::kSliceCols: {
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          for (int r = 0; r < ga.rows; ++r) {
            for (int c = 0; c < n.i1; ++c) ga.at(r, n.i0 + c) += g.at(r, c);
          }
          break;
        }
        case Op::kConcatCols: {
          int off = 0;
          for (Id p : n.list) {
            Tensor& gp = grads_[static_cast<std::size_t>(p)];
            for (int r = 0; r < gp.rows; ++r) {
              for (int c = 0; c < gp.cols; ++c) gp.at(r, c) += g.at(r, off + c);
            }
            off += gp.cols;
          }
          break;
        }
        case Op::kSubBc1:
        case Op::kAddBc1:
        case Op::kMulBc1:
        case Op::kDivBc1: {
          const Tensor& av = vals_[static_cast<std::size_t>(n.a)];
          const Tensor& bv = vals_[static_cast<std::size_t>(n.b)];
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          Tensor& gb = grads_[static_cast<std::size_t>(n.b)];
          for (int r = 0; r < av.rows; ++r) {
            const double bval = bv.at(r, 0);
            for (int c = 0; c < av.cols; ++c) {
              const double go = g.at(r, c);
              switch (n.op) {
                case Op::kSubBc1:
                  ga.at(r, c) += go;
                  gb.at(r, 0) -= go;
                  break;
                case Op::kAddBc1:
                  ga.at(r, c) += go;
                  gb.at(r, 0) += go;
                  break;
                case Op::kMulBc1:
                  ga.at(r, c) += go * bval;
                  gb.at(r, 0) += go * av.at(r, c);
                  break;
                case Op::kDivBc1:
                  ga.at(r, c) += go / bval;
                  gb.at(r, 0) -= go * av.at(r, c) / (bval * bval);
                  break;
                default:
                  break;
              }
            }
          }
          break;
        }
        case Op::kGatherCols: {
          Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
          for (int r = 0; r < ga.rows; ++r) {
            ga.at(r, n.idx[static_cast<std::size_t>(r)]) += g.at(r, 0);
          }
          break;
        }
        case Op::kSumList: {
          for (Id p : n.list) accumulate(p, g, +1.0);
          break;
        }
      }
    }
  }

 private:
  Id binary(Op op, Id a, Id b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (!av.same_shape(bv)) throw ShapeMismatchError("elementwise shape mismatch");
    Tensor y(av.rows, av.cols);
    for (std::size_t i = 0; i < y.v.size(); ++i) {
      switch (op) {
        case Op::kAdd: y.v[i] = av.v[i] + bv.v[i]; break;
        case Op::kSub: y.v[i] = av.v[i] - bv.v[i]; break;
        case Op::kMul: y.v[i] = av.v[i] * bv.v[i]; break;
        case Op::kDiv: y.v[i] = av.v[i] / bv.v[i]; break;
        case Op::kMax2: y.v[i] = std::max(av.v[i], bv.v[i]); break;
        default: break;
      }
    }
    Node n{op};
    n.a = a;
    n.b = b;
    return push(std::move(n), std::move(y));
  }

  Id broadcast1(Op op, Id a, Id b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (bv.cols != 1 || bv.rows != av.rows) throw ShapeMismatchError("broadcast needs [B×1]");
    Tensor y(av.rows, av.cols);
    for (int r = 0; r < av.rows; ++r) {
      const double bval = bv.at(r, 0);
      for (int c = 0; c < av.cols; ++c) {
        const double x = av.at(r, c);
        switch (op) {
          case Op::kSubBc1: y.at(r, c) = x - bval; break;
          case Op::kAddBc1: y.at(r, c) = x + bval; break;
          case Op::kMulBc1: y.at(r, c) = x * bval; break;
          case Op::kDivBc1: y.at(r, c) = x / bval; break;
          default: break;
        }
      }
    }
    Node n{op};
    n.a = a;
    n.b = b;
    return push(std::move(n), std::move(y));
  }

  Id unary(Op op, Id a) {
    Tensor y = value(a);
    for (double& x : y.v) {
      switch (op) {
        case Op::kNeg: x = -x; break;
        case Op::kTanh: x = std::tanh(x); break;
        case Op::kRelu: x = x > 0.0 ? x : 0.0; break;
        case Op::kSoftplus: x = softplus(x); break;
        case Op::kExp: x = std::exp(x); break;
        case Op::kLog: x = std::log(x); break;
        case Op::kSquare: x = x * x; break;
        default: break;
      }
    }
    Node n{op};
    n.a = a;
    return push(std::move(n), std::move(y));
  }

  void accumulate(Id target, const Tensor& g, double scale) {
    Tensor& gt = grads_[static_cast<std::size_t>(target)];
    for (std::size_t i = 0; i < g.v.size(); ++i) gt.v[i] += scale * g.v[i];
  }

  Id push(Node n, Tensor value) {
    nodes_.push_back(std::move(n));
    vals_.push_back(std::move(value));
    return static_cast<Id>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
  std::vector<Tensor> vals_;
  std::vector<Tensor> grads_;
};

}  // namespace exom
