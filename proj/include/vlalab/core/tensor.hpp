#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "vlalab/core/rng.hpp"

namespace vlalab::core {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

// Dense n-d array participating in a reverse-mode tape. Non-leaf nodes hold
// a backprop closure plus owning edges to their parents; backward() consumes
// those edges once the traversal is done.
template <class S>
struct TensorData {
    Shape shape;
    std::vector<S> value;
    std::vector<S> grad;  // sized lazily on first accumulation
    bool requires_grad = false;
    bool is_leaf = true;
    std::string name;
    std::vector<std::shared_ptr<TensorData<S>>> parents;
    std::function<void()> backprop;

    int64_t numel() const { return static_cast<int64_t>(value.size()); }

    std::vector<S>& grad_buf() {
        if (grad.empty()) grad.assign(value.size(), S(0));
        return grad;
    }
};

template <class S>
class TensorT {
public:
    using Data = TensorData<S>;

    TensorT() = default;
    explicit TensorT(std::shared_ptr<Data> d) : d(std::move(d)) {}

    static TensorT zeros(Shape shape) {
        auto p = std::make_shared<Data>();
        int64_t n = shape_numel(shape);
        p->shape = std::move(shape);
        p->value.assign(static_cast<size_t>(n), S(0));
        return TensorT(std::move(p));
    }

    static TensorT full(Shape shape, S v) {
        TensorT t = zeros(std::move(shape));
        for (auto& x : t.d->value) x = v;
        return t;
    }

    static TensorT scalar(S v) { return full({1}, v); }

    static TensorT from(Shape shape, std::vector<S> data) {
        if (shape_numel(shape) != static_cast<int64_t>(data.size()))
            throw std::invalid_argument("Tensor::from: shape " + shape_str(shape) + " does not match data length " +
                                        std::to_string(data.size()));
        auto p = std::make_shared<Data>();
        p->shape = std::move(shape);
        p->value = std::move(data);
        return TensorT(std::move(p));
    }

    static TensorT randn(Shape shape, Rng& rng, double stddev = 1.0) {
        TensorT t = zeros(std::move(shape));
        for (auto& x : t.d->value) x = static_cast<S>(rng.normal() * stddev);
        return t;
    }

    static TensorT uniform(Shape shape, Rng& rng, double lo, double hi) {
        TensorT t = zeros(std::move(shape));
        for (auto& x : t.d->value) x = static_cast<S>(rng.uniform(lo, hi));
        return t;
    }

    bool defined() const { return static_cast<bool>(d); }
    const Shape& shape() const { return d->shape; }
    int ndim() const { return static_cast<int>(d->shape.size()); }
    int64_t dim(int i) const { return d->shape[static_cast<size_t>(i < 0 ? i + ndim() : i)]; }
    int64_t numel() const { return d->numel(); }

    std::vector<S>& values() { return d->value; }
    const std::vector<S>& values() const { return d->value; }
    S* data() { return d->value.data(); }
    const S* data() const { return d->value.data(); }

    S item() const {
        if (numel() != 1) throw std::invalid_argument("item(): tensor has shape " + shape_str(d->shape));
        return d->value[0];
    }

    bool requires_grad() const { return d->requires_grad; }
    TensorT& set_requires_grad(bool rg = true) {
        d->requires_grad = rg;
        return *this;
    }
    TensorT& set_name(std::string n) {
        d->name = std::move(n);
        return *this;
    }
    const std::string& name() const { return d->name; }

    bool has_grad() const { return !d->grad.empty(); }
    std::vector<S>& grad() { return d->grad_buf(); }
    const std::vector<S>& grad() const { return d->grad; }
    void zero_grad() { d->grad.clear(); }

    // Leaf copy sharing no graph history.
    TensorT detach() const {
        auto p = std::make_shared<Data>();
        p->shape = d->shape;
        p->value = d->value;
        return TensorT(std::move(p));
    }

    TensorT clone_with_grad() const {
        TensorT t = detach();
        t.d->requires_grad = d->requires_grad;
        t.d->name = d->name;
        return t;
    }

    std::shared_ptr<Data> d;
};

namespace detail {

template <class S>
void topo_visit(TensorData<S>* node, std::unordered_set<TensorData<S>*>& seen, std::vector<TensorData<S>*>& order) {
    // iterative DFS; graphs can be thousands of nodes deep across a long forward
    struct Frame {
        TensorData<S>* n;
        size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({node, 0});
    seen.insert(node);
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.n->parents.size()) {
            TensorData<S>* p = f.n->parents[f.next_parent++].get();
            if (seen.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(f.n);
            stack.pop_back();
        }
    }
}

}  // namespace detail

// Reverse-mode sweep from a scalar loss. Gradients accumulate (+=) across
// fan-out and across repeated calls until zero_grad. The traversed tape is
// consumed: non-leaf nodes drop their closures and parent edges.
template <class S>
void backward(const TensorT<S>& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw std::invalid_argument("backward: loss must be a scalar tensor, got shape " +
                                    (loss.defined() ? shape_str(loss.shape()) : std::string("<null>")));
    if (loss.d->is_leaf && !loss.d->backprop)
        throw std::invalid_argument("backward: loss is a leaf with no tape behind it");

    std::unordered_set<TensorData<S>*> seen;
    std::vector<TensorData<S>*> order;
    detail::topo_visit(loss.d.get(), seen, order);

    loss.d->grad_buf()[0] += S(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backprop) (*it)->backprop();

    for (auto* n : order) {
        if (!n->is_leaf) {
            n->backprop = nullptr;
            n->parents.clear();
        }
    }
}

using Tensor = TensorT<float>;

}  // namespace vlalab::core
