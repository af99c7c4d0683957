#ifndef POWERCAP_EXPM_HPP
#define POWERCAP_EXPM_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>

namespace powercap {

namespace detail {

// Backward-error bounds for the [m/m] approximants, double precision.
inline constexpr std::array<double, 4> kPadeTheta = {1.495585217958292e-2, 2.539398330063230e-1,
                                                     9.504178996162932e-1, 2.097847961257068e0};
inline constexpr double kPadeTheta13 = 5.371920351148152e0;

template <typename Matrix>
void pade_low_order(const Matrix& a, int degree, Matrix& u, Matrix& v)
{
    using Scalar = typename Matrix::Scalar;
    static constexpr std::array<Scalar, 4> b3 = {120, 60, 12, 1};
    static constexpr std::array<Scalar, 6> b5 = {30240, 15120, 3360, 420, 30, 1};
    static constexpr std::array<Scalar, 8> b7 = {17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1};
    static constexpr std::array<Scalar, 10> b9 = {17643225600.0, 8821612800.0, 2075673600, 302702400, 30270240,
                                                  2162160,       110880,        3960,       90,        1};
    const Scalar* b = degree == 3 ? b3.data() : degree == 5 ? b5.data() : degree == 7 ? b7.data() : b9.data();

    const Matrix ident = Matrix::Identity(a.rows(), a.cols());
    const Matrix a2 = a * a;
    Matrix power = ident;
    Matrix odd = b[1] * ident;
    Matrix even = b[0] * ident;
    for (int k = 2; k <= degree; k += 2) {
        power = power * a2;
        even += b[k] * power;
        odd += b[k + 1] * power;
    }
    u = a * odd;
    v = even;
}

template <typename Matrix>
void pade13(const Matrix& a, Matrix& u, Matrix& v)
{
    using Scalar = typename Matrix::Scalar;
    static constexpr std::array<Scalar, 14> b = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                                 670442572800.0,      33522128640.0,       1323241920.0,
                                                 40840800.0,          960960.0,            16380.0,
                                                 182.0,               1.0};
    const Matrix ident = Matrix::Identity(a.rows(), a.cols());
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix tmp_u = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2);
    u = a * (tmp_u + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
    const Matrix tmp_v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2);
    v = tmp_v + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
}

} // namespace detail

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant
/// (Higham's degree selection). Intended for the small dense blocks of the
/// cell model; works for any square dense expression.
template <typename Derived>
typename Derived::PlainObject expm(const Eigen::MatrixBase<Derived>& input)
{
    using Matrix = typename Derived::PlainObject;
    using Scalar = typename Derived::Scalar;
    eigen_assert(input.rows() == input.cols());

    Matrix a = input;
    const Scalar norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    Matrix u(a.rows(), a.cols());
    Matrix v(a.rows(), a.cols());
    int squarings = 0;

    constexpr std::array<int, 4> degrees = {3, 5, 7, 9};
    bool done = false;
    for (std::size_t k = 0; k < degrees.size(); ++k) {
        if (norm1 <= static_cast<Scalar>(detail::kPadeTheta[k])) {
            detail::pade_low_order(a, degrees[k], u, v);
            done = true;
            break;
        }
    }
    if (!done) {
        if (norm1 > static_cast<Scalar>(detail::kPadeTheta13)) {
            squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / detail::kPadeTheta13))));
            a /= std::ldexp(Scalar(1), squarings);
        }
        detail::pade13(a, u, v);
    }

    Matrix result = (v - u).partialPivLu().solve(v + u);
    for (int s = 0; s < squarings; ++s)
        result = result * result;
    return result;
}

} // namespace powercap

#endif // POWERCAP_EXPM_HPP
