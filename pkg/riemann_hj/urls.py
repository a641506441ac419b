"""
URL configuration for riemann_hj project.

Only the admin is mounted; it exposes the read-only run ledger.
"""

from django.contrib import admin
from django.urls import path

urlpatterns = [
    path("admin/", admin.site.urls),
]
