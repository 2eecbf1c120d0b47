#include "octwarp/evaluation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace octwarp {

namespace {
constexpr double kPi = 3.14159265358979323846;

double median_of(std::vector<double>& v)
{
    if (v.empty()) return 0.0;
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
}

} // namespace

DisplacementField normalize_common_frame(const DisplacementField& field)
{
    DisplacementField out = field;
    const double c = std::cos(-field.alpha0), s = std::sin(-field.alpha0);
    const double inv = 1.0 / field.res_factor;
    for (Eigen::Vector3d& p : out.pos) {
        const double x = (c * p.x() - s * p.y()) * inv;
        const double y = (s * p.x() + c * p.y()) * inv;
        p = {x, y, p.z()};
    }
    out.alpha0 = 0.0;
    out.res_factor = 1.0;
    out.tile_shift = {0, 0};
    return out;
}

RigidFit fit_rigid_points(const std::vector<Eigen::Vector3d>& a,
                          const std::vector<Eigen::Vector3d>& b, FastAxis fast_axis)
{
    if (a.size() != b.size() || a.size() < 3)
        throw std::invalid_argument("fit_rigid: need matched point sets of size >= 3");
    const int n = static_cast<int>(a.size());

    // Transverse degeneracy check on the centered scatter of a.
    Eigen::Vector2d mean_a = Eigen::Vector2d::Zero();
    for (const auto& p : a) mean_a += p.head<2>();
    mean_a /= n;
    Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
    for (const auto& p : a) {
        const Eigen::Vector2d q = p.head<2>() - mean_a;
        scatter += q * q.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(scatter);
    if (es.eigenvalues()(0) < 1e-9 * std::max(1.0, es.eigenvalues()(1)))
        throw std::invalid_argument("fit_rigid: transversely collinear point set");

    // Axial part is independent of alpha: regress (a_z - b_z) on (a_fast, 1).
    double s_ff = 0, s_f = 0, s_fd = 0, s_d = 0;
    for (int i = 0; i < n; ++i) {
        const double f = fast_axis == FastAxis::X ? a[i].x() : a[i].y();
        const double dz = a[i].z() - b[i].z();
        s_ff += f * f;
        s_f += f;
        s_fd += f * dz;
        s_d += dz;
    }
    double shear = 0.0, t_z = 0.0;
    const double det = s_ff * n - s_f * s_f;
    if (std::abs(det) > 1e-12 * std::max(1.0, s_ff * n)) {
        shear = (s_fd * n - s_f * s_d) / det;
        t_z = (s_ff * s_d - s_f * s_fd) / det;
    } else {
        t_z = s_d / n;
    }
    double rss_z = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = fast_axis == FastAxis::X ? a[i].x() : a[i].y();
        const double r = a[i].z() - shear * f - t_z - b[i].z();
        rss_z += r * r;
    }

    // Transverse residual as a function of alpha, translations closed-form.
    Eigen::Vector2d mean_b = Eigen::Vector2d::Zero();
    for (const auto& p : b) mean_b += p.head<2>();
    mean_b /= n;
    auto transverse_rss = [&](double alpha) {
        const double c = std::cos(-alpha), s = std::sin(-alpha);
        double rss = 0.0;
        const Eigen::Vector2d rot_mean{c * mean_a.x() - s * mean_a.y(),
                                       s * mean_a.x() + c * mean_a.y()};
        for (int i = 0; i < n; ++i) {
            const double rx = c * a[i].x() - s * a[i].y() - rot_mean.x() - (b[i].x() - mean_b.x());
            const double ry = s * a[i].x() + c * a[i].y() - rot_mean.y() - (b[i].y() - mean_b.y());
            rss += rx * rx + ry * ry;
        }
        return rss;
    };

    // Golden-section search on [-10 deg, 10 deg].
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = -10.0 * kPi / 180.0, hi = 10.0 * kPi / 180.0;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = transverse_rss(x1), f2 = transverse_rss(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = transverse_rss(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = transverse_rss(x2);
        }
    }
    RigidFit fit;
    fit.alpha = 0.5 * (lo + hi);
    fit.fast_axis = fast_axis;
    fit.shear = shear;
    fit.t_z = t_z;
    const double c = std::cos(-fit.alpha), s = std::sin(-fit.alpha);
    fit.t_x = c * mean_a.x() - s * mean_a.y() - mean_b.x();
    fit.t_y = s * mean_a.x() + c * mean_a.y() - mean_b.y();
    fit.rss = transverse_rss(fit.alpha) + rss_z;
    return fit;
}

AffineLikeTransform fit_affine_like_points(const std::vector<Eigen::Vector3d>& a,
                                           const std::vector<Eigen::Vector3d>& b)
{
    if (a.size() != b.size() || a.size() < 5)
        throw std::invalid_argument("fit_affine_like: need matched point sets of size >= 5");
    const int n = static_cast<int>(a.size());

    Eigen::MatrixXd design_t(n, 3); // transverse rows: x, y, 1
    Eigen::MatrixXd design_z(n, 4); // axial rows: x, y, xy, 1
    Eigen::VectorXd bx(n), by(n), bz(n);
    for (int i = 0; i < n; ++i) {
        design_t(i, 0) = a[i].x();
        design_t(i, 1) = a[i].y();
        design_t(i, 2) = 1.0;
        design_z(i, 0) = a[i].x();
        design_z(i, 1) = a[i].y();
        design_z(i, 2) = a[i].x() * a[i].y();
        design_z(i, 3) = 1.0;
        bx[i] = b[i].x();
        by[i] = b[i].y();
        bz[i] = b[i].z() - a[i].z(); // z coefficient is fixed at 1
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_t(design_t);
    if (qr_t.rank() < 3) throw std::invalid_argument("fit_affine_like: rank-deficient design");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_z(design_z);
    if (qr_z.rank() < 4) throw std::invalid_argument("fit_affine_like: rank-deficient design");

    const Eigen::Vector3d cx = qr_t.solve(bx);
    const Eigen::Vector3d cy = qr_t.solve(by);
    const Eigen::Vector4d cz = qr_z.solve(bz);

    AffineLikeTransform f;
    f.a_xx = cx[0];
    f.a_xy = cx[1];
    f.t_x = cx[2];
    f.a_yx = cy[0];
    f.a_yy = cy[1];
    f.t_y = cy[2];
    f.m_x = cz[0];
    f.m_y = cz[1];
    f.m_xy = cz[2];
    f.t_z = cz[3];
    f.rss = (design_t * cx - bx).squaredNorm() + (design_t * cy - by).squaredNorm() +
            (design_z * cz - bz).squaredNorm();
    return f;
}

namespace {

void matched_points(const DisplacementField& a, const DisplacementField& b, bool exclude_ends,
                    std::vector<Eigen::Vector3d>& pa, std::vector<Eigen::Vector3d>& pb)
{
    if (a.w != b.w || a.h != b.h || a.r != b.r || a.fast_axis != b.fast_axis)
        throw std::invalid_argument("displacement fields cover different sources");
    const DisplacementField na = normalize_common_frame(a);
    const DisplacementField nb = normalize_common_frame(b);
    const int excl = exclude_ends ? static_cast<int>(std::lround(0.05 * a.h)) : 0;
    for (int slow = excl; slow < a.h - excl; ++slow) {
        for (int rep = 0; rep < a.r; ++rep) {
            for (int fast = 0; fast < a.w; ++fast) {
                const int i = a.ascan_index(slow, rep, fast);
                pa.push_back(na.pos[i]);
                pb.push_back(nb.pos[i]);
            }
        }
    }
}

} // namespace

RigidFit fit_rigid(const DisplacementField& a, const DisplacementField& b)
{
    std::vector<Eigen::Vector3d> pa, pb;
    matched_points(a, b, false, pa, pb);
    return fit_rigid_points(pa, pb, a.fast_axis);
}

AffineLikeTransform fit_affine_like(const DisplacementField& a, const DisplacementField& b)
{
    std::vector<Eigen::Vector3d> pa, pb;
    matched_points(a, b, false, pa, pb);
    return fit_affine_like_points(pa, pb);
}

ReproMetrics metrics_from_pairs(const std::vector<Eigen::Vector3d>& a,
                                const std::vector<Eigen::Vector3d>& b, FastAxis fast_axis,
                                AlignMode mode)
{
    std::vector<Eigen::Vector3d> aligned(a.size());
    if (mode == AlignMode::Rigid) {
        const RigidFit fit = fit_rigid_points(a, b, fast_axis);
        for (size_t i = 0; i < a.size(); ++i) aligned[i] = apply_rigid(fit, a[i]);
    } else {
        const AffineLikeTransform fit = fit_affine_like_points(a, b);
        for (size_t i = 0; i < a.size(); ++i) aligned[i] = apply_affine_like(fit, a[i]);
    }

    const size_t n = a.size();
    std::vector<double> dx(n), dy(n), dz(n), d3(n);
    int64_t gt_half = 0, gt_one = 0;
    for (size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d delta = aligned[i] - b[i];
        dx[i] = std::abs(delta.x());
        dy[i] = std::abs(delta.y());
        dz[i] = std::abs(delta.z());
        d3[i] = delta.norm();
        if (d3[i] > 0.5) ++gt_half;
        if (d3[i] > 1.0) ++gt_one;
    }

    ReproMetrics m;
    m.count = static_cast<int64_t>(n);
    m.median_x = median_of(dx);
    m.median_y = median_of(dy);
    m.median_z = median_of(dz);
    m.median_3d = median_of(d3);
    m.median_fast = fast_axis == FastAxis::X ? m.median_x : m.median_y;
    m.median_slow = fast_axis == FastAxis::X ? m.median_y : m.median_x;
    m.frac_gt_half = n > 0 ? static_cast<double>(gt_half) / n : 0.0;
    m.frac_gt_one = n > 0 ? static_cast<double>(gt_one) / n : 0.0;
    return m;
}

ReproMetrics reproducibility_metrics(const DisplacementField& a, const DisplacementField& b,
                                     AlignMode mode)
{
    std::vector<Eigen::Vector3d> pa, pb;
    matched_points(a, b, true, pa, pb);
    return metrics_from_pairs(pa, pb, a.fast_axis, mode);
}

DualGridResult dual_grid_protocol(const VolumeGrid& moving, const VolumeGrid& target_1,
                                  const VolumeGrid& target_2, const OptimizerConfig& base_config)
{
    OptimizerConfig cfg_1 = base_config;
    cfg_1.grid.alpha0 = kPi / 5.0;
    cfg_1.grid.res_factor = 5.0 / 6.0;
    cfg_1.grid.tile_shift = {0, 0};

    OptimizerConfig cfg_2 = base_config;
    cfg_2.grid.alpha0 = kPi / 6.0;
    cfg_2.grid.res_factor = 4.0 / 5.0;
    cfg_2.grid.tile_shift = {2, 2};

    DualGridResult result;
    result.run_1 = correct({moving, target_1}, cfg_1);
    result.run_2 = correct({moving, target_2}, cfg_2);
    result.field_1 = normalize_common_frame(result.run_1.fields[0]);
    result.field_2 = normalize_common_frame(result.run_2.fields[0]);
    return result;
}

} // namespace octwarp
