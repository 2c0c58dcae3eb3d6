#include "rom/snapshot_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rom {

namespace {

constexpr char kMagic[8] = {'R', 'O', 'M', 'S', 'N', 'A', 'P', '1'};

void fail(const std::string& what)
{
    throw std::runtime_error("snapshot_io: " + what);
}

void write_u32(std::ostream& os, std::uint32_t v)
{
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i)
        buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& is)
{
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    if (!is)
        fail("truncated header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

void write_f64_le(std::ostream& os, const double* vals, std::size_t n)
{
    // Little-endian hosts can write the raw buffer.
    static_assert(sizeof(double) == 8);
    os.write(reinterpret_cast<const char*>(vals), static_cast<std::streamsize>(n * 8));
}

void read_f64_le(std::istream& is, double* vals, std::size_t n)
{
    is.read(reinterpret_cast<char*>(vals), static_cast<std::streamsize>(n * 8));
    if (!is)
        fail("truncated payload");
}

void atomic_replace(const std::string& tmp, const std::string& path)
{
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        fail("cannot move '" + tmp + "' to '" + path + "'");
}

} // namespace

void write_snapshots(const std::string& path, const SnapshotMatrix& snapshots)
{
    snapshots.validate();
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            fail("cannot open '" + tmp + "' for writing");
        os.write(kMagic, sizeof(kMagic));
        write_u32(os, static_cast<std::uint32_t>(snapshots.n_dofs));
        write_u32(os, static_cast<std::uint32_t>(snapshots.n_channels));
        write_u32(os, static_cast<std::uint32_t>(snapshots.n_instances));
        write_u32(os, static_cast<std::uint32_t>(snapshots.n_steps));
        // Column-major payload.
        std::vector<double> col(snapshots.data.rows());
        for (std::size_t j = 0; j < snapshots.data.cols(); ++j) {
            for (std::size_t i = 0; i < snapshots.data.rows(); ++i)
                col[i] = snapshots.data(i, j);
            write_f64_le(os, col.data(), col.size());
        }
        if (!os)
            fail("write error on '" + tmp + "'");
    }
    atomic_replace(tmp, path);
}

SnapshotMatrix read_snapshots(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        fail("cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        fail("'" + path + "' is not a snapshot file (bad magic)");

    SnapshotMatrix s;
    s.n_dofs = read_u32(is);
    s.n_channels = read_u32(is);
    s.n_instances = read_u32(is);
    s.n_steps = read_u32(is);
    const std::size_t rows = s.n_dofs * s.n_channels;
    const std::size_t cols = s.n_instances * s.n_steps;
    s.data = Matrix(rows, cols);
    std::vector<double> col(rows);
    for (std::size_t j = 0; j < cols; ++j) {
        read_f64_le(is, col.data(), rows);
        for (std::size_t i = 0; i < rows; ++i)
            s.data(i, j) = col[i];
    }
    s.validate();
    return s;
}

void write_params_csv(const std::string& path, const Matrix& params)
{
    if (params.rows() < 1)
        fail("parameter matrix needs a time row");
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc);
        if (!os)
            fail("cannot open '" + tmp + "' for writing");
        os << "t";
        for (std::size_t i = 1; i < params.rows(); ++i)
            os << ",mu" << i;
        os << "\n";
        char buf[32];
        for (std::size_t j = 0; j < params.cols(); ++j) {
            for (std::size_t i = 0; i < params.rows(); ++i) {
                std::snprintf(buf, sizeof(buf), "%.17g", params(i, j));
                os << (i ? "," : "") << buf;
            }
            os << "\n";
        }
        if (!os)
            fail("write error on '" + tmp + "'");
    }
    atomic_replace(tmp, path);
}

Matrix read_params_csv(const std::string& path, std::size_t* n_mu_out)
{
    std::ifstream is(path);
    if (!is)
        fail("cannot open '" + path + "'");
    std::string header;
    if (!std::getline(is, header))
        fail("'" + path + "' is empty");
    std::size_t n_cols = 1;
    for (char c : header)
        if (c == ',')
            ++n_cols;
    if (header.rfind("t", 0) != 0)
        fail("'" + path + "' has an unexpected header");

    std::vector<double> values;
    std::string line;
    std::size_t n_rows = 0;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::stringstream ss(line);
        std::string field;
        std::size_t got = 0;
        while (std::getline(ss, field, ',')) {
            values.push_back(std::stod(field));
            ++got;
        }
        if (got != n_cols)
            fail("ragged row in '" + path + "'");
        ++n_rows;
    }
    Matrix params(n_cols, n_rows);
    for (std::size_t j = 0; j < n_rows; ++j)
        for (std::size_t i = 0; i < n_cols; ++i)
            params(i, j) = values[j * n_cols + i];
    if (n_mu_out)
        *n_mu_out = n_cols - 1;
    return params;
}

void write_plot_csv(const std::string& path, const std::vector<double>& times,
                    const std::vector<std::string>& series_names,
                    const std::vector<std::vector<double>>& series)
{
    if (series_names.size() != series.size())
        fail("plot series/name count mismatch");
    for (const auto& s : series)
        if (s.size() != times.size())
            fail("plot series length mismatch");
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc);
        if (!os)
            fail("cannot open '" + tmp + "' for writing");
        os << "t";
        for (const auto& name : series_names)
            os << "," << name;
        os << "\n";
        char buf[32];
        for (std::size_t j = 0; j < times.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", times[j]);
            os << buf;
            for (const auto& s : series) {
                std::snprintf(buf, sizeof(buf), "%.17g", s[j]);
                os << "," << buf;
            }
            os << "\n";
        }
        if (!os)
            fail("write error on '" + tmp + "'");
    }
    atomic_replace(tmp, path);
}

void read_plot_csv(const std::string& path, std::vector<double>& times,
                   std::vector<std::string>& series_names,
                   std::vector<std::vector<double>>& series)
{
    std::ifstream is(path);
    if (!is)
        fail("cannot open '" + path + "'");
    std::string header;
    if (!std::getline(is, header))
        fail("'" + path + "' is empty");
    series_names.clear();
    {
        std::stringstream ss(header);
        std::string field;
        bool first = true;
        while (std::getline(ss, field, ',')) {
            if (first) {
                if (field != "t")
                    fail("plot header must start with t");
                first = false;
            } else {
                series_names.push_back(field);
            }
        }
    }
    times.clear();
    series.assign(series_names.size(), {});
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::stringstream ss(line);
        std::string field;
        std::size_t idx = 0;
        while (std::getline(ss, field, ',')) {
            const double v = std::stod(field);
            if (idx == 0)
                times.push_back(v);
            else
                series[idx - 1].push_back(v);
            ++idx;
        }
        if (idx != series_names.size() + 1)
            fail("ragged row in '" + path + "'");
    }
}

} // namespace rom
