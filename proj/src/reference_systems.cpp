#include "lftid/reference_systems.hpp"

namespace lftid {

LftPlant mass_spring_plant() {
    LftPlant::Data d;
    // States w1, w2 hold the 1/d(s) filter seen by z; p and p' are position and velocity.
    d.E = Mat::Identity(4, 4);
    d.A_xx.resize(4, 4);
    d.A_xx << -7, 1, 0, 0,
              -25, 0, 0, 0,
              0, 0, 0, 1,
              1, 0, -25, -7;
    d.B_xu.resize(4, 1);
    d.B_xu << 0, 0, 0, 1;
    d.B_xv.resize(4, 3);
    d.B_xv << 7, -1, 0,
              25, 0, -1,
              0, 0, 0,
              -1, 0, 0;
    d.C_yx.resize(1, 4);
    d.C_yx << 0, 0, 100, 0;
    d.C_zx.resize(1, 4);
    d.C_zx << 1, 0, 0, 0;
    d.D_zu = Mat::Ones(1, 1);
    d.D_zv.resize(1, 3);
    d.D_zv << -1, 0, 0;
    d.D_yu = Mat::Zero(1, 1);
    d.D_yv = Mat::Zero(1, 3);
    for (Index i = 0; i < 3; ++i) {
        Mat P = Mat::Zero(3, 1);
        P(i, 0) = 1.0;
        d.basis.push_back(P);
    }
    d.theta_box = {{-0.5, 0.5}, {-3.5, 3.5}, {-12.5, 12.5}};
    return LftPlant(std::move(d));
}

InputGenerator two_tone_generator(double sigma1, double sigma2, double omega1, double omega2) {
    Mat Xi = Mat::Zero(4, 4);
    Xi.block(0, 0, 2, 2) << sigma1, omega1, -omega1, sigma1;
    Xi.block(2, 2, 2, 2) << sigma2, omega2, -omega2, sigma2;
    Mat Pi(1, 4);
    Pi << 0.25, 0.25, 0.5, 0.5;
    return InputGenerator(Xi, Pi, Vec::Ones(4));
}

ParameterVector mass_spring_reference_theta() {
    Vec t(3);
    t << 0.1852, 0.5126, 6.2582;
    return ParameterVector(t);
}

}  // namespace lftid
