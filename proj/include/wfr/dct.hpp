#pragma once

#include <fftw3.h>

#include <memory>
#include <mutex>
#include <vector>

#include "wfr/grid.hpp"

namespace wfr {

namespace detail {

// FFTW's planner is not re-entrant.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const
    {
        if (p) {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(p);
        }
    }
};

using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

} // namespace detail

/// Separable cosine transforms over every axis of a field with fixed shape.
///
/// Forward (DCT-II):  c[k] = sum_n u[n] cos(pi (n + 1/2) k / N) along each
/// axis, i.e. FFTW's REDFT10 halved. Inverse (DCT-III) is normalized so that
/// inverse(forward(u)) == u. Axes of extent 1 are skipped.
class CosineTransform {
public:
    explicit CosineTransform(Shape shape) : shape_(shape), buffer_(shape.size())
    {
        std::vector<int> n;
        for (std::size_t e : {shape.t, shape.a, shape.b})
            if (e > 1) n.push_back(static_cast<int>(e));
        if (n.empty()) n.push_back(1);
        forward_scale_ = 1.0;
        inverse_scale_ = 1.0;
        for (int e : n) {
            forward_scale_ *= 0.5;
            inverse_scale_ /= static_cast<double>(e);
        }
        std::vector<fftw_r2r_kind> fwd(n.size(), FFTW_REDFT10), bwd(n.size(), FFTW_REDFT01);
        std::lock_guard lock(detail::fftw_planner_mutex());
        const int rank = static_cast<int>(n.size());
        forward_.reset(fftw_plan_r2r(rank, n.data(), buffer_.data(), buffer_.data(), fwd.data(), FFTW_ESTIMATE | FFTW_UNALIGNED));
        inverse_.reset(fftw_plan_r2r(rank, n.data(), buffer_.data(), buffer_.data(), bwd.data(), FFTW_ESTIMATE | FFTW_UNALIGNED));
    }

    const Shape& shape() const { return shape_; }

    Field forward(const Field& u) const { return run(u, forward_.get(), forward_scale_); }
    Field inverse(const Field& c) const { return run(c, inverse_.get(), inverse_scale_); }

private:
    Field run(const Field& in, fftw_plan_s* plan, double scale) const
    {
        if (!(in.shape() == shape_)) throw ContractError("CosineTransform: shape mismatch");
        Field out = in;
        fftw_execute_r2r(plan, out.data(), out.data());
        out *= scale;
        return out;
    }

    Shape shape_;
    std::vector<double> buffer_;
    detail::PlanHandle forward_;
    detail::PlanHandle inverse_;
    double forward_scale_ = 1.0;
    double inverse_scale_ = 1.0;
};

inline Field dct2_forward(const Field& u) { return CosineTransform(u.shape()).forward(u); }
inline Field dct3_inverse(const Field& c) { return CosineTransform(c.shape()).inverse(c); }

} // namespace wfr
