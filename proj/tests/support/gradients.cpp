#include "gradients.hpp"

#include "scenes.hpp"

#include <algorithm>
#include <cmath>

namespace pedsplat::fixtures {

std::vector<TrainingView> random_training_views(std::mt19937_64& rng, int size, double focal) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TrainingView> views;
    for (int c = 0; c < 2; ++c) {
        TrainingView v;
        v.camera = ring_camera(c, 3, 4.0, 1.5, size, focal);
        v.target = RgbImage(size, size);
        v.mask = Mask(size, size, 0);
        v.instances = LabelImage(size, size, 0);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                v.target(x, y) = Rgb(u(rng), u(rng), u(rng));
                if (x > size / 5 && x < size - size / 5 - 1 && y > size / 8 && y < size - size / 8) {
                    v.mask(x, y) = 1;
                    v.instances(x, y) = x < size / 2 ? 1 : 2;
                }
            }
        views.push_back(std::move(v));
    }
    return views;
}

GradCheck check_gradient(std::vector<Gaussian3D> gs, const std::vector<GaussianGradient>& analytic,
                         const LossFn& loss) {
    std::vector<double> a, n;
    auto probe = [&](double& param, double h, double exact) {
        const double keep = param;
        param = keep + h;
        const double up = loss(gs);
        param = keep - h;
        const double down = loss(gs);
        param = keep;
        a.push_back(exact);
        n.push_back((up - down) / (2.0 * h));
    };
    for (std::size_t i = 0; i < gs.size(); ++i) {
        for (int k = 0; k < 3; ++k) probe(gs[i].mean[k], 1e-6, analytic[i].mean[k]);
        for (int k = 0; k < 3; ++k) probe(gs[i].log_scales[k], 1e-6, analytic[i].log_scales[k]);
        probe(gs[i].opacity_logit, 1e-6, analytic[i].opacity_logit);
        for (int k = 0; k < 3; ++k) probe(gs[i].color[k], 1e-6, analytic[i].color[k]);
        probe(gs[i].orientation.w(), 1e-7, analytic[i].quaternion[0]);
        probe(gs[i].orientation.x(), 1e-7, analytic[i].quaternion[1]);
        probe(gs[i].orientation.y(), 1e-7, analytic[i].quaternion[2]);
        probe(gs[i].orientation.z(), 1e-7, analytic[i].quaternion[3]);
    }
    double diff2 = 0.0, ref2 = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        diff2 += (a[j] - n[j]) * (a[j] - n[j]);
        ref2 += n[j] * n[j];
        scale = std::max(scale, std::abs(n[j]));
    }
    GradCheck out;
    out.norm_rel = std::sqrt(diff2 / std::max(ref2, 1e-300));
    for (std::size_t j = 0; j < a.size(); ++j)
        out.max_rel = std::max(out.max_rel, std::abs(a[j] - n[j]) / std::max(std::abs(n[j]), 1e-2 * scale));
    return out;
}

} // namespace pedsplat::fixtures
