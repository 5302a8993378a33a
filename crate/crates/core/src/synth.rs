//! Synthetic feeds: small hand-checkable fixtures and a scalable grid city.

use chrono::NaiveDate;

use crate::geo::METERS_PER_DEG;
use crate::gtfs::*;

pub const fn hms(h: u32, m: u32, s: u32) -> u32 {
    h * 3600 + m * 60 + s
}

/// Incrementally assembles a feed. Starts with one agency and two services:
/// `WKDY` (Monday to Friday) and `SAT` (Saturday), both 2021-04-11..2021-10-02.
pub struct FeedBuilder {
    feed: Feed,
}

impl Default for FeedBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl FeedBuilder {
    pub fn new() -> Self {
        let date = |d| NaiveDate::from_ymd_opt(2021, 4, d).expect("valid date");
        let end = NaiveDate::from_ymd_opt(2021, 10, 2).expect("valid date");
        let feed = Feed {
            agencies: vec![Agency {
                agency_id: Some("SYN".into()),
                name: "Synthetic Transit".into(),
                url: "https://transit.example".into(),
                timezone: "America/Chicago".into(),
            }],
            calendars: vec![
                ServiceCalendar {
                    service_id: "WKDY".into(),
                    weekday_mask: [true, true, true, true, true, false, false],
                    start_date: date(11),
                    end_date: end,
                },
                ServiceCalendar {
                    service_id: "SAT".into(),
                    weekday_mask: [false, false, false, false, false, true, false],
                    start_date: date(11),
                    end_date: end,
                },
            ],
            ..Feed::default()
        };
        FeedBuilder { feed }
    }

    pub fn stop(mut self, id: &str, lat: f64, lon: f64) -> Self {
        self.feed.stops.push(Stop { stop_id: id.into(), name: format!("Stop {id}"), lat, lon });
        self
    }

    /// Adds a trip calling at `(stop_id, arrival_s, departure_s)` in order.
    /// The route is created on first use.
    pub fn trip(mut self, trip_id: &str, route_id: &str, service_id: &str, calls: &[(&str, u32, u32)]) -> Self {
        if !self.feed.routes.iter().any(|r| r.route_id == route_id) {
            self.feed.routes.push(Route {
                route_id: route_id.into(),
                agency_id: Some("SYN".into()),
                short_name: route_id.into(),
                long_name: format!("Route {route_id}"),
                route_type: 3,
            });
        }
        self.feed.trips.push(Trip {
            trip_id: trip_id.into(),
            route_id: route_id.into(),
            service_id: service_id.into(),
            shape_id: None,
        });
        for (i, &(stop, arr, dep)) in calls.iter().enumerate() {
            self.feed.stop_times.push(StopTime {
                trip_id: trip_id.into(),
                stop_id: stop.into(),
                stop_sequence: i as u32 + 1,
                arrival_s: arr,
                departure_s: dep,
            });
        }
        self
    }

    pub fn frequency(mut self, trip_id: &str, start_s: u32, end_s: u32, headway_s: u32) -> Self {
        self.feed.frequencies.get_or_insert_with(Vec::new).push(Frequency {
            trip_id: trip_id.into(),
            start_s,
            end_s,
            headway_s,
            exact_times: true,
        });
        self
    }

    pub fn transfer(mut self, from: &str, to: &str, min_transfer_s: u32) -> Self {
        self.feed.transfers.get_or_insert_with(Vec::new).push(Transfer {
            from_stop_id: from.into(),
            to_stop_id: to.into(),
            transfer_type: 2,
            min_transfer_s,
        });
        self
    }

    pub fn exception(mut self, service_id: &str, date: NaiveDate, kind: ExceptionKind) -> Self {
        self.feed.calendar_exceptions.push(CalendarException { service_id: service_id.into(), date, kind });
        self
    }

    pub fn build(mut self) -> Feed {
        self.feed.normalize_stop_times();
        self.feed
    }
}

/// Calls at successive stops every `run_s` seconds from `start`, dwelling
/// `dwell_s` at each stop (including the first and last).
pub fn timetable<'a>(stops: &[&'a str], start: u32, run_s: u32, dwell_s: u32) -> Vec<(&'a str, u32, u32)> {
    stops
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let arr = start + k as u32 * run_s;
            (s, arr, arr + dwell_s)
        })
        .collect()
}

/// One weekday trip over stops A, B, C (about 900 m apart, beyond walking
/// range): A 08:00:00/08:00:30, B 08:10:00/08:10:30, C 08:20:00/08:20:30.
/// The `SAT` service has no trips.
pub fn single_trip_feed() -> Feed {
    FeedBuilder::new()
        .stop("A", 36.16, -86.80)
        .stop("B", 36.16, -86.79)
        .stop("C", 36.16, -86.78)
        .trip("T1", "R1", "WKDY", &timetable(&["A", "B", "C"], hms(8, 0, 0), 600, 30))
        .build()
}

/// Three routes over nine stops, twelve trips (six `WKDY`, six `SAT`).
///
/// Every call dwells 30 s and consecutive stops are 10 min apart.
/// `S3`–`S4` (about 144 m) and `S5`–`S7` (about 200 m) are the only
/// stop pairs within walking range, so reaching `S6` or `S9` from `S1`
/// forces transfers.
///
/// | route | stops    | WKDY starts  | SAT starts   |
/// |-------|----------|--------------|--------------|
/// | R1    | S1 S2 S3 | 08:00, 08:30 | 10:00, 11:00 |
/// | R2    | S4 S5 S6 | 08:25, 08:55 | 10:25, 11:25 |
/// | R3    | S7 S8 S9 | 08:40, 09:10 | 10:45, 11:45 |
pub fn three_route_feed() -> Feed {
    let routes: [(&str, [&str; 3], [u32; 4]); 3] = [
        ("R1", ["S1", "S2", "S3"], [hms(8, 0, 0), hms(8, 30, 0), hms(10, 0, 0), hms(11, 0, 0)]),
        ("R2", ["S4", "S5", "S6"], [hms(8, 25, 0), hms(8, 55, 0), hms(10, 25, 0), hms(11, 25, 0)]),
        ("R3", ["S7", "S8", "S9"], [hms(8, 40, 0), hms(9, 10, 0), hms(10, 45, 0), hms(11, 45, 0)]),
    ];
    let mut b = FeedBuilder::new()
        .stop("S1", 36.16, -86.80)
        .stop("S2", 36.16, -86.79)
        .stop("S3", 36.16, -86.78)
        .stop("S4", 36.16, -86.7784)
        .stop("S5", 36.16, -86.768)
        .stop("S6", 36.16, -86.758)
        .stop("S7", 36.1618, -86.768)
        .stop("S8", 36.171, -86.768)
        .stop("S9", 36.180, -86.768);
    for (route, stops, starts) in routes {
        for (k, start) in starts.into_iter().enumerate() {
            let service = if k < 2 { "WKDY" } else { "SAT" };
            let id = format!("{route}-{}", k + 1);
            b = b.trip(&id, route, service, &timetable(&stops, start, 600, 30));
        }
    }
    b.build()
}

/// Knobs for [`grid_city`].
#[derive(Debug, Clone)]
pub struct GridCity {
    /// Parallel east-west lines.
    pub lines: usize,
    pub stops_per_line: usize,
    /// Trips per line, alternating direction.
    pub trips_per_line: usize,
    pub line_spacing_m: f64,
    pub stop_spacing_m: f64,
    pub first_departure_s: u32,
    pub headway_s: u32,
    pub hop_s: u32,
}

impl Default for GridCity {
    /// 2,000 stops and 100,000 stop_time rows.
    fn default() -> Self {
        GridCity {
            lines: 40,
            stops_per_line: 50,
            trips_per_line: 50,
            line_spacing_m: 350.0,
            stop_spacing_m: 500.0,
            first_departure_s: hms(5, 0, 0),
            headway_s: 1200,
            hop_s: 90,
        }
    }
}

/// A lattice of parallel bus lines around downtown Nashville. Lines are
/// close enough that vertically aligned stops are within walking range.
/// All trips run on `WKDY`.
pub fn grid_city(p: &GridCity) -> Feed {
    let (lat0, lon0): (f64, f64) = (36.10, -86.85);
    let dlat = p.line_spacing_m / METERS_PER_DEG;
    let dlon = p.stop_spacing_m / (METERS_PER_DEG * lat0.to_radians().cos());
    let mut feed = FeedBuilder::new().build();
    feed.stops.reserve(p.lines * p.stops_per_line);
    feed.stop_times.reserve(p.lines * p.trips_per_line * p.stops_per_line);
    for line in 0..p.lines {
        let route_id = format!("L{line}");
        feed.routes.push(Route {
            route_id: route_id.clone(),
            agency_id: Some("SYN".into()),
            short_name: route_id.clone(),
            long_name: format!("Line {line}"),
            route_type: 3,
        });
        for s in 0..p.stops_per_line {
            feed.stops.push(Stop {
                stop_id: format!("L{line}S{s}"),
                name: format!("Line {line} stop {s}"),
                lat: lat0 + line as f64 * dlat,
                lon: lon0 + s as f64 * dlon,
            });
        }
        for k in 0..p.trips_per_line {
            let trip_id = format!("L{line}T{k}");
            // Stagger lines so transfers need some waiting.
            let start = p.first_departure_s + (k as u32 / 2) * p.headway_s + (line as u32 * 97) % p.headway_s;
            feed.trips.push(Trip {
                trip_id: trip_id.clone(),
                route_id: route_id.clone(),
                service_id: "WKDY".into(),
                shape_id: None,
            });
            for seq in 0..p.stops_per_line {
                let s = if k % 2 == 0 { seq } else { p.stops_per_line - 1 - seq };
                let t = start + seq as u32 * p.hop_s;
                feed.stop_times.push(StopTime {
                    trip_id: trip_id.clone(),
                    stop_id: format!("L{line}S{s}"),
                    stop_sequence: seq as u32 + 1,
                    arrival_s: t,
                    departure_s: t,
                });
            }
        }
    }
    feed
}

/// Copy of `feed` with every trip duplicated under a new id, doubling the
/// scheduled service.
pub fn doubled_service(feed: &Feed) -> Feed {
    let mut out = feed.clone();
    for t in &feed.trips {
        out.trips.push(Trip { trip_id: format!("{}-dup", t.trip_id), ..t.clone() });
    }
    for st in &feed.stop_times {
        out.stop_times.push(StopTime { trip_id: format!("{}-dup", st.trip_id), ..st.clone() });
    }
    out.normalize_stop_times();
    out
}
