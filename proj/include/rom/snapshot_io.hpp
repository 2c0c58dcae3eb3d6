#ifndef ROM_SNAPSHOT_IO_HPP
#define ROM_SNAPSHOT_IO_HPP

#include "rom/fom.hpp"

#include <string>
#include <vector>

namespace rom {

// Snapshot container format: magic "ROMSNAP1", four little-endian u32
// fields (n_dofs, n_channels, n_instances, n_steps), then the matrix as
// little-endian f64 in column-major order, columns instance-major then
// time. Writes go through a temp file and a rename.
void write_snapshots(const std::string& path, const SnapshotMatrix& snapshots);
SnapshotMatrix read_snapshots(const std::string& path);

// Parameter bookkeeping as UTF-8 CSV with header "t,mu1,...,muN", one row
// per snapshot column.
void write_params_csv(const std::string& path, const Matrix& params);
Matrix read_params_csv(const std::string& path, std::size_t* n_mu_out = nullptr);

// Plot data: first column t, then one named series per column.
void write_plot_csv(const std::string& path, const std::vector<double>& times,
                    const std::vector<std::string>& series_names,
                    const std::vector<std::vector<double>>& series);
// Reads a plot CSV back (used by round-trip checks).
void read_plot_csv(const std::string& path, std::vector<double>& times,
                   std::vector<std::string>& series_names,
                   std::vector<std::vector<double>>& series);

} // namespace rom

#endif
