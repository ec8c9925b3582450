//! A buyer asks a seller for the price of a book and buys it if the price is
//! within budget, learning the delivery date.

use std::collections::BTreeMap;

use choreo::{comm, cond, locally, mdo, try_locally, Choreo, Located, LocationId};
use chrono::NaiveDate;

pub const BUYER: &str = "buyer";
pub const BUYER2: &str = "buyer2";
pub const SELLER: &str = "seller";

pub type Price = i64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Listing {
    pub price: Price,
    pub delivery: NaiveDate,
}

/// What each side knows before the protocol starts: the buyer's wish and
/// budget, and the seller's catalog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shop {
    pub title: String,
    pub budget: Price,
    pub catalog: BTreeMap<String, Listing>,
}

pub const TAPL: &str = "Types and Programming Languages";
pub const HOTT: &str = "Homotopy Type Theory";
pub const BUDGET: Price = 100;

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid fixture date")
}

impl Shop {
    /// The default catalog, with the buyer after `title`.
    pub fn fixture(title: impl Into<String>) -> Shop {
        let catalog = [
            (
                TAPL,
                Listing {
                    price: 80,
                    delivery: date(2026, 11, 2),
                },
            ),
            (
                HOTT,
                Listing {
                    price: 120,
                    delivery: date(2026, 12, 1),
                },
            ),
        ];
        Shop {
            title: title.into(),
            budget: BUDGET,
            catalog: catalog
                .into_iter()
                .map(|(t, l)| (t.to_string(), l))
                .collect(),
        }
    }

    /// A one-book catalog, for exercising specific prices.
    pub fn single(title: impl Into<String>, price: Price, delivery: NaiveDate) -> Shop {
        let title = title.into();
        Shop {
            catalog: BTreeMap::from([(title.clone(), Listing { price, delivery })]),
            title,
            budget: BUDGET,
        }
    }

    fn listing(&self, title: &str) -> Result<&Listing, String> {
        self.catalog
            .get(title)
            .ok_or_else(|| format!("no such title: {title:?}"))
    }
}

/// Turns the price the buyer was quoted into a decision at the buyer.
pub type Decision = Box<dyn FnOnce(Located<Price>) -> Choreo<Located<bool>> + Send>;

/// Buy if the price is within the buyer's budget.
pub fn mk_decision1(budget: Price) -> Decision {
    Box::new(move |price| locally(BUYER, move |un| *un.unwrap(&price) <= budget))
}

/// A second buyer pays half; buy if the rest is within budget.
pub fn mk_decision2(budget: Price) -> Decision {
    Box::new(move |price| {
        mdo! {
            shared <- comm(BUYER, &price, BUYER2);
            contrib <- locally(BUYER2, move |un| *un.unwrap(&shared) / 2);
            contrib <- comm(BUYER2, &contrib, BUYER);
            locally(BUYER, move |un| *un.unwrap(&price) <= *un.unwrap(&contrib) + budget)
        }
    })
}

/// The bookseller protocol with the buyer's decision supplied by the caller.
pub fn bookseller(shop: &Shop, mk_decision: Decision) -> Choreo<Located<Option<NaiveDate>>> {
    protocol(shop, BUYER.into(), mk_decision)
}

/// The single-buyer bookseller with any location as the buyer.
pub fn bookseller_polymorphic(
    shop: &Shop,
    buyer: impl Into<LocationId>,
) -> Result<Choreo<Located<Option<NaiveDate>>>, String> {
    let buyer = buyer.into();
    if buyer == SELLER {
        return Err(format!("the buyer cannot be `{SELLER}`"));
    }
    let budget = shop.budget;
    let at = buyer.clone();
    let decide: Decision =
        Box::new(move |price| locally(at, move |un| *un.unwrap(&price) <= budget));
    Ok(protocol(shop, buyer, decide))
}

fn protocol(
    shop: &Shop,
    buyer: LocationId,
    mk_decision: Decision,
) -> Choreo<Located<Option<NaiveDate>>> {
    let title = shop.title.clone();
    let catalog = shop.clone();
    mdo! {
        title <- locally(buyer.clone(), move |_| title);
        title <- comm(buyer.clone(), &title, SELLER);
        let lookup = catalog.clone();
        let wanted = title.clone();
        price <- try_locally(SELLER, move |un| lookup.listing(un.unwrap(&wanted)).map(|l| l.price));
        price <- comm(SELLER, &price, buyer.clone());
        decision <- mk_decision(price);
        cond(buyer.clone(), &decision, move |buy: bool| {
            if buy {
                mdo! {
                    date <- try_locally(SELLER, move |un| catalog.listing(un.unwrap(&title)).map(|l| Some(l.delivery)));
                    comm(SELLER, &date, buyer)
                }
            } else {
                locally(buyer, |_| None)
            }
        })
    }
}
