"""Multipoint-to-point tree routing with consolidated middleboxes."""
