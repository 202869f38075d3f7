//! Big-endian cursor helpers shared by the MRT and BGP decoders.

use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use ipnet::{IpNet, Ipv4Net, Ipv6Net};
use thiserror::Error;

/// Failure to decode a record body whose framing was intact.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BodyError {
    #[error("body ended while reading {0}")]
    Short(&'static str),
    #[error("invalid BGP marker")]
    BadMarker,
    #[error("BGP length field {declared} disagrees with {available} available bytes")]
    BadBgpLength { declared: usize, available: usize },
    #[error("unsupported address family {0}")]
    BadAfi(u16),
    #[error("prefix length {len} exceeds {max}")]
    BadPrefixLength { len: u8, max: u8 },
    #[error("attribute {code}: {reason}")]
    BadAttribute { code: u8, reason: &'static str },
    #[error("microsecond field {0} is not below 1000000")]
    Microseconds(u32),
    #[error("{0} trailing bytes after body")]
    Trailing(usize),
}

pub(crate) struct Wire<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Wire<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.remaining() == 0
    }

    pub fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], BodyError> {
        if self.remaining() < n {
            return Err(BodyError::Short(what));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn rest(&mut self) -> &'a [u8] {
        let out = &self.buf[self.pos..];
        self.pos = self.buf.len();
        out
    }

    pub fn u8(&mut self, what: &'static str) -> Result<u8, BodyError> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u16(&mut self, what: &'static str) -> Result<u16, BodyError> {
        let b = self.take(2, what)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    pub fn u32(&mut self, what: &'static str) -> Result<u32, BodyError> {
        let b = self.take(4, what)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn ipv4(&mut self, what: &'static str) -> Result<Ipv4Addr, BodyError> {
        let b = self.take(4, what)?;
        Ok(Ipv4Addr::new(b[0], b[1], b[2], b[3]))
    }

    pub fn ipv6(&mut self, what: &'static str) -> Result<Ipv6Addr, BodyError> {
        let b = self.take(16, what)?;
        let mut octets = [0u8; 16];
        octets.copy_from_slice(b);
        Ok(Ipv6Addr::from(octets))
    }

    /// Address whose width is selected by an MRT/BGP AFI value.
    pub fn ip_by_afi(&mut self, afi: u16, what: &'static str) -> Result<IpAddr, BodyError> {
        match afi {
            AFI_IPV4 => Ok(IpAddr::V4(self.ipv4(what)?)),
            AFI_IPV6 => Ok(IpAddr::V6(self.ipv6(what)?)),
            other => Err(BodyError::BadAfi(other)),
        }
    }

    /// One length-prefixed NLRI prefix.
    pub fn prefix(&mut self, afi: u16) -> Result<IpNet, BodyError> {
        let len = self.u8("prefix length")?;
        let max = match afi {
            AFI_IPV4 => 32,
            AFI_IPV6 => 128,
            other => return Err(BodyError::BadAfi(other)),
        };
        if len > max {
            return Err(BodyError::BadPrefixLength { len, max });
        }
        let bytes = self.take(usize::from(len).div_ceil(8), "prefix bytes")?;
        Ok(match afi {
            AFI_IPV4 => {
                let mut o = [0u8; 4];
                o[..bytes.len()].copy_from_slice(bytes);
                IpNet::V4(Ipv4Net::new(Ipv4Addr::from(o), len).expect("length checked"))
            }
            _ => {
                let mut o = [0u8; 16];
                o[..bytes.len()].copy_from_slice(bytes);
                IpNet::V6(Ipv6Net::new(Ipv6Addr::from(o), len).expect("length checked"))
            }
        })
    }
}

pub const AFI_IPV4: u16 = 1;
pub const AFI_IPV6: u16 = 2;

pub fn afi_of(addr: &IpAddr) -> u16 {
    match addr {
        IpAddr::V4(_) => AFI_IPV4,
        IpAddr::V6(_) => AFI_IPV6,
    }
}

pub fn afi_of_net(net: &IpNet) -> u16 {
    match net {
        IpNet::V4(_) => AFI_IPV4,
        IpNet::V6(_) => AFI_IPV6,
    }
}

pub fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub fn put_ip(out: &mut Vec<u8>, addr: &IpAddr) {
    match addr {
        IpAddr::V4(a) => out.extend_from_slice(&a.octets()),
        IpAddr::V6(a) => out.extend_from_slice(&a.octets()),
    }
}

pub fn put_prefix(out: &mut Vec<u8>, net: &IpNet) {
    let len = net.prefix_len();
    out.push(len);
    let n = usize::from(len).div_ceil(8);
    match net.addr() {
        IpAddr::V4(a) => out.extend_from_slice(&a.octets()[..n]),
        IpAddr::V6(a) => out.extend_from_slice(&a.octets()[..n]),
    }
}
