use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Cursor, Read, Seek};
use std::path::Path;

use csv::StringRecord;

use super::time::{parse_date, parse_time};
use super::*;

const TABLES: [&str; 12] = [
    "agency",
    "stops",
    "routes",
    "trips",
    "stop_times",
    "calendar",
    "calendar_dates",
    "frequencies",
    "transfers",
    "shapes",
    "fare_attributes",
    "fare_rules",
];

/// Loads a feed from a zip archive or a directory holding `*.txt` tables.
pub fn load_feed(source: impl AsRef<Path>) -> Result<Feed> {
    let source = source.as_ref();
    if source.is_dir() {
        let mut tables = BTreeMap::new();
        for name in TABLES {
            let path = source.join(format!("{name}.txt"));
            if path.is_file() {
                tables.insert(name.to_string(), std::fs::read(path)?);
            }
        }
        load_feed_from_tables(tables)
    } else {
        let file = std::fs::File::open(source)?;
        load_zip(file)
    }
}

pub fn load_feed_from_zip_bytes(bytes: &[u8]) -> Result<Feed> {
    load_zip(Cursor::new(bytes))
}

fn load_zip<R: Read + Seek>(reader: R) -> Result<Feed> {
    let mut archive = zip::ZipArchive::new(reader)?;
    // Some publishers wrap the tables in a folder; take the shallowest copy.
    let mut chosen: HashMap<String, (usize, usize)> = HashMap::new();
    for i in 0..archive.len() {
        let entry = archive.by_index(i)?;
        if entry.is_dir() {
            continue;
        }
        let full = entry.name()?.replace('\\', "/");
        let depth = full.matches('/').count();
        let base = full.rsplit('/').next().unwrap_or_default();
        if let Some(stem) = base.strip_suffix(".txt") {
            if TABLES.contains(&stem) {
                let slot = chosen.entry(stem.to_string()).or_insert((depth, i));
                if depth < slot.0 {
                    *slot = (depth, i);
                }
            }
        }
    }
    let mut tables = BTreeMap::new();
    for (name, (_, i)) in chosen {
        let mut entry = archive.by_index(i)?;
        let mut buf = Vec::with_capacity(entry.size() as usize);
        entry.read_to_end(&mut buf)?;
        tables.insert(name, buf);
    }
    load_feed_from_tables(tables)
}

/// Builds a feed from raw table bytes keyed by table name (`"stops"`, ...).
pub fn load_feed_from_tables<K, V>(tables: impl IntoIterator<Item = (K, V)>) -> Result<Feed>
where
    K: AsRef<str>,
    V: AsRef<[u8]>,
{
    let raw: HashMap<String, V> = tables.into_iter().map(|(k, v)| (k.as_ref().to_string(), v)).collect();
    for name in ["agency", "stops", "routes", "trips", "stop_times"] {
        if !raw.contains_key(name) {
            return Err(GtfsError::MissingTable(name.to_string()));
        }
    }
    if !raw.contains_key("calendar") && !raw.contains_key("calendar_dates") {
        return Err(GtfsError::MissingTable("calendar".to_string()));
    }
    let table = |name: &'static str| -> Result<Option<Table>> {
        raw.get(name).map(|bytes| Table::read(name, bytes.as_ref())).transpose()
    };

    let mut notes = Vec::new();
    let mut feed = Feed {
        agencies: parse_agencies(&table("agency")?.unwrap())?,
        stops: parse_stops(&table("stops")?.unwrap(), &mut notes)?,
        routes: parse_routes(&table("routes")?.unwrap())?,
        trips: parse_trips(&table("trips")?.unwrap())?,
        stop_times: parse_stop_times(&table("stop_times")?.unwrap(), &mut notes)?,
        calendars: table("calendar")?.map(|t| parse_calendars(&t)).transpose()?.unwrap_or_default(),
        calendar_exceptions: table("calendar_dates")?.map(|t| parse_exceptions(&t)).transpose()?.unwrap_or_default(),
        frequencies: table("frequencies")?.map(|t| parse_frequencies(&t)).transpose()?,
        transfers: table("transfers")?.map(|t| parse_transfers(&t)).transpose()?,
        shapes: table("shapes")?.map(|t| parse_shapes(&t)).transpose()?,
        fare_attributes: table("fare_attributes")?.map(|t| parse_fare_attributes(&t)).transpose()?,
        fare_rules: table("fare_rules")?.map(|t| parse_fare_rules(&t)).transpose()?,
        notes: Vec::new(),
    };
    feed.normalize_stop_times();
    feed.notes = notes;
    Ok(feed)
}

struct Table {
    name: &'static str,
    columns: HashMap<String, usize>,
    rows: Vec<(u64, StringRecord)>,
}

struct Row<'a> {
    table: &'static str,
    line: u64,
    record: &'a StringRecord,
}

impl Table {
    fn read(name: &'static str, bytes: &[u8]) -> Result<Self> {
        let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
        let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(bytes);
        let malformed =
            |line: u64, e: csv::Error| GtfsError::MalformedRow { table: name.to_string(), line, reason: e.to_string() };
        let headers = reader.headers().map_err(|e| malformed(1, e))?.clone();
        let columns = headers.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                malformed(line, e)
            })?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            rows.push((line, record));
        }
        Ok(Table { name, columns, rows })
    }

    fn col(&self, column: &str) -> Result<usize> {
        self.columns
            .get(column)
            .copied()
            .ok_or_else(|| GtfsError::MissingColumn { table: self.name.to_string(), column: column.to_string() })
    }

    fn opt_col(&self, column: &str) -> Option<usize> {
        self.columns.get(column).copied()
    }

    fn rows(&self) -> impl Iterator<Item = Row<'_>> {
        self.rows.iter().map(|(line, record)| Row { table: self.name, line: *line, record })
    }
}

impl Row<'_> {
    fn malformed(&self, reason: impl Into<String>) -> GtfsError {
        GtfsError::MalformedRow { table: self.table.to_string(), line: self.line, reason: reason.into() }
    }

    fn get(&self, col: Option<usize>) -> &str {
        col.and_then(|c| self.record.get(c)).unwrap_or("")
    }

    fn text(&self, col: usize, name: &str) -> Result<String> {
        match self.get(Some(col)) {
            "" => Err(self.malformed(format!("empty `{name}`"))),
            v => Ok(v.to_string()),
        }
    }

    fn opt_text(&self, col: Option<usize>) -> Option<String> {
        match self.get(col) {
            "" => None,
            v => Some(v.to_string()),
        }
    }

    fn number<T: std::str::FromStr>(&self, col: usize, name: &str) -> Result<T> {
        let v = self.get(Some(col));
        v.parse().map_err(|_| self.malformed(format!("bad `{name}` value `{v}`")))
    }

    fn opt_number<T: std::str::FromStr>(&self, col: Option<usize>, name: &str) -> Result<Option<T>> {
        match self.get(col) {
            "" => Ok(None),
            v => v.parse().map(Some).map_err(|_| self.malformed(format!("bad `{name}` value `{v}`"))),
        }
    }

    fn date(&self, col: usize) -> Result<chrono::NaiveDate> {
        parse_date(self.get(Some(col))).map_err(|e| self.malformed(e))
    }
}

fn parse_agencies(t: &Table) -> Result<Vec<Agency>> {
    let (id, name, url, tz) =
        (t.opt_col("agency_id"), t.col("agency_name")?, t.col("agency_url")?, t.col("agency_timezone")?);
    t.rows()
        .map(|r| {
            Ok(Agency {
                agency_id: r.opt_text(id),
                name: r.get(Some(name)).to_string(),
                url: r.get(Some(url)).to_string(),
                timezone: r.get(Some(tz)).to_string(),
            })
        })
        .collect()
}

fn parse_stops(t: &Table, notes: &mut Vec<Finding>) -> Result<Vec<Stop>> {
    let (id, name, lat, lon) = (t.col("stop_id")?, t.opt_col("stop_name"), t.col("stop_lat")?, t.col("stop_lon")?);
    let mut stops = Vec::with_capacity(t.rows.len());
    for r in t.rows() {
        let stop_id = r.text(id, "stop_id")?;
        let (Some(lat), Some(lon)) =
            (r.opt_number::<f64>(Some(lat), "stop_lat")?, r.opt_number::<f64>(Some(lon), "stop_lon")?)
        else {
            notes.push(Finding::warning(
                "stops",
                Some(r.line),
                format!("stop `{stop_id}` has no coordinates; skipped"),
            ));
            continue;
        };
        stops.push(Stop { stop_id, name: r.get(name).to_string(), lat, lon });
    }
    Ok(stops)
}

fn parse_routes(t: &Table) -> Result<Vec<Route>> {
    let (id, agency, short, long, kind) = (
        t.col("route_id")?,
        t.opt_col("agency_id"),
        t.opt_col("route_short_name"),
        t.opt_col("route_long_name"),
        t.col("route_type")?,
    );
    t.rows()
        .map(|r| {
            Ok(Route {
                route_id: r.text(id, "route_id")?,
                agency_id: r.opt_text(agency),
                short_name: r.get(short).to_string(),
                long_name: r.get(long).to_string(),
                route_type: r.number(kind, "route_type")?,
            })
        })
        .collect()
}

fn parse_trips(t: &Table) -> Result<Vec<Trip>> {
    let (route, service, id, shape) =
        (t.col("route_id")?, t.col("service_id")?, t.col("trip_id")?, t.opt_col("shape_id"));
    t.rows()
        .map(|r| {
            Ok(Trip {
                trip_id: r.text(id, "trip_id")?,
                route_id: r.text(route, "route_id")?,
                service_id: r.text(service, "service_id")?,
                shape_id: r.opt_text(shape),
            })
        })
        .collect()
}

fn parse_stop_times(t: &Table, notes: &mut Vec<Finding>) -> Result<Vec<StopTime>> {
    let (trip, stop, seq, arr, dep) = (
        t.col("trip_id")?,
        t.col("stop_id")?,
        t.col("stop_sequence")?,
        t.col("arrival_time")?,
        t.col("departure_time")?,
    );
    let mut seen = HashSet::with_capacity(t.rows.len());
    let mut out = Vec::with_capacity(t.rows.len());
    for r in t.rows() {
        let trip_id = r.text(trip, "trip_id")?;
        let stop_sequence: u32 = r.number(seq, "stop_sequence")?;
        let (arrival_s, departure_s) = match (r.get(Some(arr)), r.get(Some(dep))) {
            ("", "") => return Err(r.malformed("untimed stop_times rows are not supported")),
            (a, "") | ("", a) => {
                let s = parse_time(a)?;
                (s, s)
            }
            (a, d) => (parse_time(a)?, parse_time(d)?),
        };
        if !seen.insert((trip_id.clone(), stop_sequence)) {
            notes.push(Finding::warning(
                "stop_times",
                Some(r.line),
                format!("duplicate stop_sequence {stop_sequence} on trip `{trip_id}`; kept the first row"),
            ));
            continue;
        }
        out.push(StopTime { trip_id, stop_id: r.text(stop, "stop_id")?, stop_sequence, arrival_s, departure_s });
    }
    Ok(out)
}

fn parse_calendars(t: &Table) -> Result<Vec<ServiceCalendar>> {
    const DAYS: [&str; 7] = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"];
    let id = t.col("service_id")?;
    let days = DAYS.iter().map(|d| t.col(d)).collect::<Result<Vec<_>>>()?;
    let (start, end) = (t.col("start_date")?, t.col("end_date")?);
    t.rows()
        .map(|r| {
            let mut weekday_mask = [false; 7];
            for (slot, (&col, name)) in weekday_mask.iter_mut().zip(days.iter().zip(DAYS)) {
                *slot = match r.get(Some(col)) {
                    "1" => true,
                    "0" => false,
                    v => return Err(r.malformed(format!("bad `{name}` value `{v}`"))),
                };
            }
            Ok(ServiceCalendar {
                service_id: r.text(id, "service_id")?,
                weekday_mask,
                start_date: r.date(start)?,
                end_date: r.date(end)?,
            })
        })
        .collect()
}

fn parse_exceptions(t: &Table) -> Result<Vec<CalendarException>> {
    let (id, date, kind) = (t.col("service_id")?, t.col("date")?, t.col("exception_type")?);
    t.rows()
        .map(|r| {
            let kind = match r.get(Some(kind)) {
                "1" => ExceptionKind::Added,
                "2" => ExceptionKind::Removed,
                v => return Err(r.malformed(format!("bad `exception_type` value `{v}`"))),
            };
            Ok(CalendarException { service_id: r.text(id, "service_id")?, date: r.date(date)?, kind })
        })
        .collect()
}

fn parse_frequencies(t: &Table) -> Result<Vec<Frequency>> {
    let (trip, start, end, headway, exact) =
        (t.col("trip_id")?, t.col("start_time")?, t.col("end_time")?, t.col("headway_secs")?, t.opt_col("exact_times"));
    t.rows()
        .map(|r| {
            Ok(Frequency {
                trip_id: r.text(trip, "trip_id")?,
                start_s: parse_time(r.get(Some(start)))?,
                end_s: parse_time(r.get(Some(end)))?,
                headway_s: r.number(headway, "headway_secs")?,
                exact_times: r.get(exact) == "1",
            })
        })
        .collect()
}

fn parse_transfers(t: &Table) -> Result<Vec<Transfer>> {
    let (from, to, kind, min) =
        (t.col("from_stop_id")?, t.col("to_stop_id")?, t.opt_col("transfer_type"), t.opt_col("min_transfer_time"));
    t.rows()
        .map(|r| {
            Ok(Transfer {
                from_stop_id: r.text(from, "from_stop_id")?,
                to_stop_id: r.text(to, "to_stop_id")?,
                transfer_type: r.opt_number(kind, "transfer_type")?.unwrap_or(0),
                min_transfer_s: r.opt_number(min, "min_transfer_time")?.unwrap_or(0),
            })
        })
        .collect()
}

fn parse_shapes(t: &Table) -> Result<Vec<ShapePoint>> {
    let (id, lat, lon, seq) =
        (t.col("shape_id")?, t.col("shape_pt_lat")?, t.col("shape_pt_lon")?, t.col("shape_pt_sequence")?);
    t.rows()
        .map(|r| {
            Ok(ShapePoint {
                shape_id: r.text(id, "shape_id")?,
                lat: r.number(lat, "shape_pt_lat")?,
                lon: r.number(lon, "shape_pt_lon")?,
                sequence: r.number(seq, "shape_pt_sequence")?,
            })
        })
        .collect()
}

fn parse_fare_attributes(t: &Table) -> Result<Vec<FareAttribute>> {
    let (id, price, currency, payment, transfers) =
        (t.col("fare_id")?, t.col("price")?, t.col("currency_type")?, t.col("payment_method")?, t.col("transfers")?);
    t.rows()
        .map(|r| {
            Ok(FareAttribute {
                fare_id: r.text(id, "fare_id")?,
                price: r.text(price, "price")?,
                currency_type: r.text(currency, "currency_type")?,
                payment_method: r.number(payment, "payment_method")?,
                transfers: r.opt_number(Some(transfers), "transfers")?,
            })
        })
        .collect()
}

fn parse_fare_rules(t: &Table) -> Result<Vec<FareRule>> {
    let id = t.col("fare_id")?;
    let (route, origin, dest, contains) =
        (t.opt_col("route_id"), t.opt_col("origin_id"), t.opt_col("destination_id"), t.opt_col("contains_id"));
    t.rows()
        .map(|r| {
            Ok(FareRule {
                fare_id: r.text(id, "fare_id")?,
                route_id: r.opt_text(route),
                origin_id: r.opt_text(origin),
                destination_id: r.opt_text(dest),
                contains_id: r.opt_text(contains),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> BTreeMap<&'static str, String> {
        BTreeMap::from([
            ("agency", "agency_id,agency_name,agency_url,agency_timezone\nA,Agency,http://a.example,America/Chicago\n".to_string()),
            ("stops", "stop_id,stop_name,stop_lat,stop_lon\nS1,One,36.1,-86.7\nS2,\"Two, with comma\",36.2,-86.8\n".to_string()),
            ("routes", "route_id,agency_id,route_short_name,route_long_name,route_type\nR1,A,1,Main,3\n".to_string()),
            ("trips", "route_id,service_id,trip_id\nR1,WKDY,T1\n".to_string()),
            (
                "stop_times",
                "trip_id,arrival_time,departure_time,stop_id,stop_sequence\nT1,25:10:00,25:10:30,S1,1\nT1,25:20:00,,S2,2\n"
                    .to_string(),
            ),
            ("calendar", "service_id,monday,tuesday,wednesday,thursday,friday,saturday,sunday,start_date,end_date\nWKDY,1,1,1,1,1,0,0,20210411,20211002\n".to_string()),
        ])
    }

    #[test]
    fn parses_minimal_feed() {
        let feed = load_feed_from_tables(minimal()).unwrap();
        assert_eq!(feed.stops[1].name, "Two, with comma");
        assert_eq!(feed.stop_times[0].arrival_s, 90600);
        assert_eq!(feed.stop_times[1].departure_s, feed.stop_times[1].arrival_s);
        assert!(feed.frequencies.is_none());
    }

    #[test]
    fn tolerates_bom_and_unknown_columns() {
        let mut t = minimal();
        t.insert("stops", "\u{feff}stop_id,stop_name,stop_lat,stop_lon,zone_id,wheelchair_boarding\nS1,One,36.1,-86.7,z,1\nS2,Two,36.2,-86.8,,\n".to_string());
        let feed = load_feed_from_tables(t).unwrap();
        assert_eq!(feed.stops.len(), 2);
        assert_eq!(feed.stops[0].stop_id, "S1");
    }

    #[test]
    fn missing_tables_and_columns() {
        let mut t = minimal();
        t.remove("stops");
        assert!(matches!(load_feed_from_tables(t), Err(GtfsError::MissingTable(n)) if n == "stops"));

        let mut t = minimal();
        t.remove("calendar");
        assert!(matches!(load_feed_from_tables(t), Err(GtfsError::MissingTable(n)) if n == "calendar"));

        let mut t = minimal();
        t.insert("trips", "route_id,trip_id\nR1,T1\n".to_string());
        assert!(
            matches!(load_feed_from_tables(t), Err(GtfsError::MissingColumn { column, .. }) if column == "service_id")
        );
    }

    #[test]
    fn malformed_values() {
        let mut t = minimal();
        t.insert("stops", "stop_id,stop_name,stop_lat,stop_lon\nS1,One,north,-86.7\n".to_string());
        assert!(matches!(load_feed_from_tables(t), Err(GtfsError::MalformedRow { line: 2, .. })));

        let mut t = minimal();
        t.insert(
            "stop_times",
            "trip_id,arrival_time,departure_time,stop_id,stop_sequence\nT1,8:0:00,08:00:00,S1,1\n".to_string(),
        );
        assert!(matches!(load_feed_from_tables(t), Err(GtfsError::BadTime(s)) if s == "8:0:00"));
    }

    #[test]
    fn duplicate_stop_sequence_keeps_first() {
        let mut t = minimal();
        t.insert(
            "stop_times",
            "trip_id,arrival_time,departure_time,stop_id,stop_sequence\nT1,08:00:00,08:00:00,S1,1\nT1,09:00:00,09:00:00,S2,1\n".to_string(),
        );
        let feed = load_feed_from_tables(t).unwrap();
        assert_eq!(feed.stop_times.len(), 1);
        assert_eq!(feed.stop_times[0].stop_id, "S1");
        assert_eq!(feed.notes.len(), 1);
        assert_eq!(feed.notes[0].severity, Severity::Warning);
    }

    #[test]
    fn stops_without_coordinates_are_skipped() {
        let mut t = minimal();
        t.insert(
            "stops",
            "stop_id,stop_name,stop_lat,stop_lon\nS1,One,36.1,-86.7\nS2,Two,36.2,-86.8\nP,Parent,,\n".to_string(),
        );
        let feed = load_feed_from_tables(t).unwrap();
        assert_eq!(feed.stops.len(), 2);
        assert_eq!(feed.notes.len(), 1);
    }
}
