//! Compile static GTFS feeds into time-expanded transit networks and query
//! them.
//!
//! A network has one node per distinct `(stop, time)` event of the selected
//! service and three kinds of links: riding a trip between consecutive
//! calls, waiting at a stop for its next event, and walking to a nearby
//! stop. Every link points forward in time, so earliest-arrival search is a
//! plain label-setting pass and the reversed graph answers "leave by when?"
//! questions.
//!
//! ```no_run
//! use gtfs2stn_core::gtfs::load_feed;
//! use gtfs2stn_core::network::{build_network, BuildConfig};
//! use gtfs2stn_core::router::{isochrone, HyperNode, IsochroneQuery};
//!
//! let feed = load_feed("feed.zip")?;
//! let net = build_network(&feed, &BuildConfig::new(["WKDY"]))?;
//! let q = IsochroneQuery::new(HyperNode::stop("S1", 8 * 3600), 3600);
//! let result = isochrone(&net, &q)?;
//! println!("{} stops within an hour", result.stop_times.len());
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```
//!
//! The `examples/` directory has one runnable program per capability.

pub mod analysis;
pub mod geo;
pub mod gtfs;
pub mod network;
pub mod router;
pub mod synth;
