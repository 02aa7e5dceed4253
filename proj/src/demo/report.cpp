#include "cfgen/demo/report.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "cfgen/core/errors.hpp"
#include "cfgen/simd/kernels.hpp"

namespace cfgen {

std::vector<std::array<double, 2>> pca_2d(std::span<const std::vector<double>> points) {
  std::vector<std::array<double, 2>> out(points.size(), {0.0, 0.0});
  if (points.empty()) return out;
  const auto n = static_cast<Eigen::Index>(points.size());
  const auto d = static_cast<Eigen::Index>(points[0].size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = points[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / std::max<double>(1.0, static_cast<double>(n - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // Eigenvalues ascend; the leading components are the last columns.
  for (int comp = 0; comp < 2 && comp < d; ++comp) {
    Eigen::VectorXd axis = solver.eigenvectors().col(d - 1 - comp);
    Eigen::Index pivot = 0;
    axis.cwiseAbs().maxCoeff(&pivot);
    if (axis(pivot) < 0) axis = -axis;
    std::vector<double> a(axis.data(), axis.data() + d);
    std::vector<double> row(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) row[static_cast<std::size_t>(j)] = x(i, j);
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(comp)] = simd::dot(row, a);
    }
  }
  return out;
}

nlohmann::json clustering_summary(const Clustering& clustering) {
  return {{"k", clustering.k},
          {"sizes", clustering.cluster_sizes()},
          {"inertia", clustering.inertia},
          {"inertia_trace", clustering.inertia_trace},
          {"iterations", clustering.iterations},
          {"converged", clustering.converged},
          {"reseeds", clustering.reseeds}};
}

std::vector<std::filesystem::path> write_clustering_report(
    const std::filesystem::path& dir, const Clustering& clustering,
    std::span<const std::vector<double>> points) {
  std::filesystem::create_directories(dir);
  const auto summary_path = dir / "clustering.json";
  const auto csv_path = dir / "clustering_pca.csv";
  {
    std::ofstream out(summary_path);
    if (!out) throw Error(Error::Category::kInternal, "cannot write " + summary_path.string());
    out << clustering_summary(clustering).dump(2) << '\n';
  }
  const auto projected = pca_2d(points);
  std::ofstream out(csv_path);
  if (!out) throw Error(Error::Category::kInternal, "cannot write " + csv_path.string());
  out << "id,cluster,pc1,pc2\n" << std::setprecision(10);
  for (std::size_t i = 0; i < projected.size(); ++i) {
    out << clustering.ids[i] << ',' << clustering.assignments[i] << ',' << projected[i][0] << ','
        << projected[i][1] << '\n';
  }
  return {summary_path, csv_path};
}

}  // namespace cfgen
