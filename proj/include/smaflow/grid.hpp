#pragma once

#include <array>
#include <complex>
#include <concepts>
#include <cstddef>
#include <new>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace smaflow {

using cplx = std::complex<double>;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IncompatibleData : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FieldIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace exec {
// deterministic mode fixes the reduction order; it is the default
void set_deterministic(bool on);
bool deterministic();
}  // namespace exec

struct TorusGrid {
    std::array<std::size_t, 4> n{};
    std::array<double, 4> L{};

    std::size_t size() const { return n[0] * n[1] * n[2] * n[3]; }
    double spacing(int a) const { return L[a] / double(n[a]); }
    double coord(int a, std::size_t i) const { return L[a] * double(i) / double(n[a]); }
    std::size_t index(std::size_t i1, std::size_t i2, std::size_t i3, std::size_t i4) const {
        return ((i1 * n[1] + i2) * n[2] + i3) * n[3] + i4;
    }
    bool operator==(const TorusGrid&) const = default;
};

TorusGrid make_grid(std::array<std::size_t, 4> dims, std::array<double, 4> periods);

// 64-byte aligned storage so FFTW new-array execution sees the planned alignment
template <class T>
struct AlignedAllocator {
    using value_type = T;
    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) {}
    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{64}));
    }
    void deallocate(T* p, std::size_t) { ::operator delete(p, std::align_val_t{64}); }
    template <class U>
    bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <class T>
class Field {
public:
    using value_type = T;
    using Storage = std::vector<T, AlignedAllocator<T>>;

    Field() = default;
    explicit Field(const TorusGrid& g, T fill = T{}) : grid_(g), data_(g.size(), fill) {}
    Field(const TorusGrid& g, Storage data) : grid_(g), data_(std::move(data)) {
        if (data_.size() != grid_.size()) throw std::invalid_argument("field data length does not match grid");
    }

    const TorusGrid& grid() const { return grid_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }
    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }
    const Storage& storage() const { return data_; }

    template <class U>
    Field& operator+=(const Field<U>& o) {
        check_same(o.grid());
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o[i];
        return *this;
    }
    template <class U>
    Field& operator-=(const Field<U>& o) {
        check_same(o.grid());
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o[i];
        return *this;
    }
    Field& operator*=(T s) {
        for (auto& v : data_) v *= s;
        return *this;
    }
    Field& operator+=(T s) {
        for (auto& v : data_) v += s;
        return *this;
    }

    void check_same(const TorusGrid& g) const {
        if (!(g == grid_)) throw std::invalid_argument("fields live on different grids");
    }

private:
    TorusGrid grid_{};
    Storage data_;
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;

template <class S>
concept Scalar = std::is_arithmetic_v<S> || std::same_as<S, cplx>;

template <class T, class F>
auto map(const Field<T>& a, F f) {
    using R = std::decay_t<decltype(f(a[0]))>;
    Field<R> out(a.grid());
    const std::size_t n = a.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) out[i] = f(a[i]);
    return out;
}

template <class A, class B, class F>
auto zip(const Field<A>& a, const Field<B>& b, F f) {
    a.check_same(b.grid());
    using R = std::decay_t<decltype(f(a[0], b[0]))>;
    Field<R> out(a.grid());
    const std::size_t n = a.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
    return out;
}

template <class A, class B>
auto operator+(const Field<A>& a, const Field<B>& b) { return zip(a, b, [](A x, B y) { return x + y; }); }
template <class A, class B>
auto operator-(const Field<A>& a, const Field<B>& b) { return zip(a, b, [](A x, B y) { return x - y; }); }
template <class A, class B>
auto operator*(const Field<A>& a, const Field<B>& b) { return zip(a, b, [](A x, B y) { return x * y; }); }
template <class A, class B>
auto operator/(const Field<A>& a, const Field<B>& b) { return zip(a, b, [](A x, B y) { return x / y; }); }

template <class A, Scalar S>
auto operator+(const Field<A>& a, S s) { return map(a, [s](A x) { return x + s; }); }
template <class A, Scalar S>
auto operator+(S s, const Field<A>& a) { return map(a, [s](A x) { return s + x; }); }
template <class A, Scalar S>
auto operator-(const Field<A>& a, S s) { return map(a, [s](A x) { return x - s; }); }
template <class A, Scalar S>
auto operator-(S s, const Field<A>& a) { return map(a, [s](A x) { return s - x; }); }
template <class A, Scalar S>
auto operator*(const Field<A>& a, S s) { return map(a, [s](A x) { return x * s; }); }
template <class A, Scalar S>
auto operator*(S s, const Field<A>& a) { return map(a, [s](A x) { return s * x; }); }
template <class A, Scalar S>
auto operator/(const Field<A>& a, S s) { return map(a, [s](A x) { return x / s; }); }
template <class A, Scalar S>
auto operator/(S s, const Field<A>& a) { return map(a, [s](A x) { return s / x; }); }
template <class A>
auto operator-(const Field<A>& a) { return map(a, [](A x) { return -x; }); }

RealField real(const ComplexField& f);
RealField imag(const ComplexField& f);
ComplexField conj(const ComplexField& f);
ComplexField to_complex(const RealField& f);
RealField abs2(const ComplexField& f);
RealField abs(const ComplexField& f);
RealField abs(const RealField& f);
RealField log(const RealField& f);
RealField exp(const RealField& f);
RealField sqrt(const RealField& f);
RealField pow(const RealField& f, double p);

template <class Fn>
RealField sample(const TorusGrid& g, Fn fn) {
    RealField out(g);
    for (std::size_t i1 = 0; i1 < g.n[0]; ++i1)
        for (std::size_t i2 = 0; i2 < g.n[1]; ++i2)
            for (std::size_t i3 = 0; i3 < g.n[2]; ++i3)
                for (std::size_t i4 = 0; i4 < g.n[3]; ++i4)
                    out[g.index(i1, i2, i3, i4)] =
                        fn(g.coord(0, i1), g.coord(1, i2), g.coord(2, i3), g.coord(3, i4));
    return out;
}

struct FieldStats {
    double min = 0, max = 0, sup_norm = 0, mean = 0;
    std::size_t argmin = 0, argmax = 0;
};

FieldStats stats(const RealField& f);
double sup_norm(const ComplexField& f);
double sup_norm(const RealField& f);
double mean(const RealField& f);
bool all_finite(const RealField& f);
bool all_finite(const ComplexField& f);

}  // namespace smaflow
