#include "netpulse/geo.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "netpulse/csv.hpp"

namespace netpulse {

IpAddress parse_ipv4(const std::string& text) {
    std::uint32_t octets[4];
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
            throw std::invalid_argument("malformed IPv4 '" + text + "': field " +
                                        std::to_string(i + 1) + " is not a number");
        std::uint32_t v = 0;
        std::size_t digits = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            v = v * 10 + static_cast<std::uint32_t>(text[pos] - '0');
            ++digits;
            ++pos;
            if (v > 255 || digits > 3)
                throw std::invalid_argument("malformed IPv4 '" + text + "': field " +
                                            std::to_string(i + 1) + " exceeds 255");
        }
        octets[i] = v;
        if (i < 3) {
            if (pos >= text.size() || text[pos] != '.')
                throw std::invalid_argument("malformed IPv4 '" + text + "': expected '.' after field " +
                                            std::to_string(i + 1));
            ++pos;
        }
    }
    if (pos != text.size())
        throw std::invalid_argument("malformed IPv4 '" + text + "': trailing characters");
    return IpAddress{(octets[0] << 24) | (octets[1] << 16) | (octets[2] << 8) | octets[3]};
}

std::string format_ipv4(IpAddress ip) {
    const std::uint32_t v = ip.value;
    return std::to_string(v >> 24) + '.' + std::to_string((v >> 16) & 0xff) + '.' +
           std::to_string((v >> 8) & 0xff) + '.' + std::to_string(v & 0xff);
}

GeoIndex GeoIndex::build(const std::vector<GeoRangeRecord>& records, BuildStats* stats) {
    BuildStats local;
    // per revision: interval overlay keyed by start ip; each insertion clips
    // whatever was loaded before it (last wins on the overlapped part)
    struct Segment {
        std::uint32_t hi;
        GeoLocation loc;
    };
    std::map<std::int64_t, std::map<std::uint32_t, Segment>> overlay;
    for (const GeoRangeRecord& r : records) {
        if (!r.valid()) {
            ++local.rejected;
            continue;
        }
        ++local.accepted;
        auto& rev = overlay[r.revision_date];
        const std::uint32_t lo = r.ip_lo.value, hi = r.ip_hi.value;
        bool clipped_any = false;

        // find all segments intersecting [lo, hi]
        auto it = rev.upper_bound(lo);
        if (it != rev.begin()) {
            auto prev = std::prev(it);
            if (prev->second.hi >= lo) it = prev;
        }
        while (it != rev.end() && it->first <= hi) {
            const std::uint32_t s_lo = it->first, s_hi = it->second.hi;
            const Segment seg = it->second;
            it = rev.erase(it);
            clipped_any = true;
            if (s_lo < lo) rev[s_lo] = Segment{lo - 1, seg.loc};
            if (s_hi > hi) rev[hi + 1] = Segment{s_hi, seg.loc};
        }
        if (clipped_any) ++local.conflicts;
        rev[lo] = Segment{hi, GeoLocation{r.lon, r.lat}};
    }

    GeoIndex idx;
    idx.revisions_.reserve(overlay.size());
    for (auto& [date, rev] : overlay) {
        Revision out;
        out.date = date;
        out.intervals.reserve(rev.size());
        for (auto& [lo, seg] : rev) out.intervals.push_back(Interval{lo, seg.hi, seg.loc});
        // merge nothing: adjacency with equal locations is left as-is (harmless)
        idx.revisions_.push_back(std::move(out));
    }
    if (stats) *stats = local;
    return idx;
}

std::size_t GeoIndex::interval_count() const {
    std::size_t n = 0;
    for (const auto& r : revisions_) n += r.intervals.size();
    return n;
}

std::optional<GeoLocation> GeoIndex::locate(IpAddress ip, std::int64_t t) const {
    std::size_t steps = 0;
    return locate_counted(ip, t, steps);
}

std::optional<GeoLocation> GeoIndex::locate_counted(IpAddress ip, std::int64_t t,
                                                    std::size_t& steps) const {
    // latest revision with date <= t
    std::size_t lo = 0, hi = revisions_.size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (revisions_[mid].date <= t)
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo == 0) return std::nullopt; // query predates all revisions
    const Revision& rev = revisions_[lo - 1];

    // rightmost interval with interval.lo <= ip
    const auto& iv = rev.intervals;
    std::size_t a = 0, b = iv.size();
    while (a < b) {
        ++steps;
        const std::size_t mid = (a + b) / 2;
        if (iv[mid].lo <= ip.value)
            a = mid + 1;
        else
            b = mid;
    }
    if (a == 0) return std::nullopt;
    const Interval& cand = iv[a - 1];
    if (ip.value > cand.hi) return std::nullopt;
    return cand.loc;
}

std::optional<GeoLocation> locate_bruteforce(const std::vector<GeoRangeRecord>& records,
                                             IpAddress ip, std::int64_t t) {
    // active revision = max revision_date <= t among valid records
    bool has_rev = false;
    std::int64_t rev_date = 0;
    for (const GeoRangeRecord& r : records) {
        if (!r.valid()) continue;
        if (r.revision_date <= t && (!has_rev || r.revision_date > rev_date)) {
            rev_date = r.revision_date;
            has_rev = true;
        }
    }
    if (!has_rev) return std::nullopt;
    // last record in load order containing ip wins
    std::optional<GeoLocation> hit;
    for (const GeoRangeRecord& r : records) {
        if (!r.valid() || r.revision_date != rev_date) continue;
        if (r.ip_lo <= ip && ip <= r.ip_hi) hit = GeoLocation{r.lon, r.lat};
    }
    return hit;
}

std::vector<ScanRecord> read_scan_csv(const std::string& path) {
    CsvTable t = CsvTable::from_file(path);
    const std::size_t c_ts = t.column("timestamp_utc");
    const std::size_t c_ip = t.column("ip");
    const std::size_t c_st = t.column("status");
    std::vector<ScanRecord> out;
    out.reserve(t.rows());
    for (std::size_t i = 0; i < t.rows(); ++i) {
        ScanRecord r;
        r.timestamp = t.integer(i, c_ts);
        r.ip = parse_ipv4(t.cell(i, c_ip));
        const std::int64_t s = t.integer(i, c_st);
        if (s != 0 && s != 1)
            throw std::runtime_error(path + ": status must be 0 or 1, got " + std::to_string(s));
        r.status = s ? ProbeStatus::online : ProbeStatus::offline;
        out.push_back(r);
    }
    return out;
}

std::vector<GeoRangeRecord> read_geo_csv(const std::string& path) {
    CsvTable t = CsvTable::from_file(path);
    const std::size_t c_lo = t.column("ip_lo");
    const std::size_t c_hi = t.column("ip_hi");
    const std::size_t c_lon = t.column("lon");
    const std::size_t c_lat = t.column("lat");
    const std::size_t c_rev = t.column("revision_date");
    std::vector<GeoRangeRecord> out;
    out.reserve(t.rows());
    for (std::size_t i = 0; i < t.rows(); ++i) {
        GeoRangeRecord r;
        r.ip_lo = parse_ipv4(t.cell(i, c_lo));
        r.ip_hi = parse_ipv4(t.cell(i, c_hi));
        r.lon = t.num(i, c_lon);
        r.lat = t.num(i, c_lat);
        r.revision_date = days_from_civil(parse_date(t.cell(i, c_rev))) * 86400;
        out.push_back(r);
    }
    return out;
}

} // namespace netpulse
