#include "qwalk/expm.hpp"

#include <array>
#include <cmath>

namespace qwalk {

namespace {

using Eigen::MatrixXd;

// Builds U (odd part) and V (even part) of the degree-m Pade numerator.
template <std::size_t N>
void pade_low(const MatrixXd& a, const std::array<double, N>& b, MatrixXd& u, MatrixXd& v) {
  const auto id = MatrixXd::Identity(a.rows(), a.cols());
  const MatrixXd a2 = a * a;
  MatrixXd power = id;
  MatrixXd odd = b[1] * id;
  v = b[0] * id;
  for (std::size_t k = 2; k < N; k += 2) {
    power = power * a2;
    v += b[k] * power;
    odd += b[k + 1] * power;
  }
  u = a * odd;
}

void pade13(const MatrixXd& a, MatrixXd& u, MatrixXd& v) {
  constexpr std::array<double, 14> b = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                        1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                        670442572800.0,      33522128640.0,       1323241920.0,
                                        40840800.0,          960960.0,            16380.0,
                                        182.0,               1.0};
  const auto id = MatrixXd::Identity(a.rows(), a.cols());
  const MatrixXd a2 = a * a;
  const MatrixXd a4 = a2 * a2;
  const MatrixXd a6 = a4 * a2;
  const MatrixXd inner_u = b[13] * a6 + b[11] * a4 + b[9] * a2;
  u = a * (a6 * inner_u + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const MatrixXd inner_v = b[12] * a6 + b[10] * a4 + b[8] * a2;
  v = a6 * inner_v + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

}  // namespace

MatrixXd expm(const MatrixXd& a) {
  constexpr std::array<double, 4> theta = {1.495585217958292e-2, 2.539398330063230e-1,
                                           9.504178996162932e-1, 2.097847961257068e0};
  constexpr double theta13 = 5.371920351148152;
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();

  MatrixXd u, v;
  int squarings = 0;
  if (norm <= theta[0]) {
    pade_low(a, std::array<double, 4>{120.0, 60.0, 12.0, 1.0}, u, v);
  } else if (norm <= theta[1]) {
    pade_low(a, std::array<double, 6>{30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0}, u, v);
  } else if (norm <= theta[2]) {
    pade_low(a, std::array<double, 8>{17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0},
             u, v);
  } else if (norm <= theta[3]) {
    pade_low(a,
             std::array<double, 10>{17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
                                    2162160.0, 110880.0, 3960.0, 90.0, 1.0},
             u, v);
  } else {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
    pade13(a / std::ldexp(1.0, squarings), u, v);
  }
  MatrixXd r = (v - u).partialPivLu().solve(u + v);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

}  // namespace qwalk
