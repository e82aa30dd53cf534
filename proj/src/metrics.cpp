#include "pam/metrics.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace pam {

Vec3 SimilarityTransform::apply(const Vec3& p) const {
    Vec3 out;
    for (int r = 0; r < 3; ++r) {
        out[r] = scale * (rotation[r][0] * p[0] + rotation[r][1] * p[1] +
                          rotation[r][2] * p[2]) +
                 translation[r];
    }
    return out;
}

double mpjpe(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
             size_t root_index) {
    if (pred.size() != gt.size() || pred.empty()) {
        throw ShapeError("mpjpe joint counts differ: " + std::to_string(pred.size()) +
                         " vs " + std::to_string(gt.size()));
    }
    if (root_index >= pred.size()) throw ValueError("mpjpe root index out of range");
    const Vec3& rp = pred[root_index];
    const Vec3& rg = gt[root_index];
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        Vec3 d = vsub(vsub(pred[i], rp), vsub(gt[i], rg));
        acc += vnorm(d);
    }
    return acc / static_cast<double>(pred.size());
}

SimilarityTransform procrustes_align(const std::vector<Vec3>& pred,
                                     const std::vector<Vec3>& gt) {
    size_t n = pred.size();
    if (n != gt.size() || n < 3) {
        throw ValueError("procrustes_align needs >=3 paired joints");
    }
    Eigen::Vector3d mu_x = Eigen::Vector3d::Zero(), mu_y = Eigen::Vector3d::Zero();
    for (size_t i = 0; i < n; ++i) {
        mu_x += Eigen::Vector3d(pred[i][0], pred[i][1], pred[i][2]);
        mu_y += Eigen::Vector3d(gt[i][0], gt[i][1], gt[i][2]);
    }
    mu_x /= static_cast<double>(n);
    mu_y /= static_cast<double>(n);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    double var_x = 0.0;
    for (size_t i = 0; i < n; ++i) {
        Eigen::Vector3d x = Eigen::Vector3d(pred[i][0], pred[i][1], pred[i][2]) - mu_x;
        Eigen::Vector3d y = Eigen::Vector3d(gt[i][0], gt[i][1], gt[i][2]) - mu_y;
        cov += y * x.transpose();
        var_x += x.squaredNorm();
    }
    cov /= static_cast<double>(n);
    var_x /= static_cast<double>(n);
    if (var_x < 1e-18) {
        throw ValueError("procrustes_align: coincident source configuration");
    }

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d d = svd.singularValues();
    if (d(1) <= 1e-12 * std::max(d(0), 1e-300)) {
        throw ValueError("procrustes_align: degenerate (collinear) configuration");
    }
    Eigen::Vector3d sgn(1.0, 1.0, 1.0);
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) sgn(2) = -1.0;
    Eigen::Matrix3d rot = svd.matrixU() * sgn.asDiagonal() * svd.matrixV().transpose();
    double s = d.dot(sgn) / var_x;
    if (s <= 0.0) throw ValueError("procrustes_align: nonpositive optimal scale");
    Eigen::Vector3d t = mu_y - s * rot * mu_x;

    SimilarityTransform out;
    out.scale = s;
    for (int r = 0; r < 3; ++r) {
        out.rotation[r] = {rot(r, 0), rot(r, 1), rot(r, 2)};
        out.translation[r] = t(r);
    }
    return out;
}

double pa_mpjpe(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt) {
    SimilarityTransform tf = procrustes_align(pred, gt);
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        acc += vnorm(vsub(tf.apply(pred[i]), gt[i]));
    }
    return acc / static_cast<double>(pred.size());
}

}  // namespace pam
